#include "gpudse/report.hpp"

#include "gpudse/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace gpudse {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("csv line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(cur));
    return out;
}

bool is_size_axis(ParamAxis a) {
    return a == ParamAxis::l1_size || a == ParamAxis::l2_size || a == ParamAxis::shmem;
}

// Sizes in KB, the register file in K registers, everything else as is.
std::string display_value(ParamAxis a, std::uint64_t v) {
    if (is_size_axis(a) || a == ParamAxis::regfile) {
        if (v % 1024 == 0) return std::to_string(v / 1024);
        return format_exact(double(v) / 1024.0);
    }
    return std::to_string(v);
}

std::string display_unit(ParamAxis a) {
    if (is_size_axis(a)) return "_kb";
    if (a == ParamAxis::regfile) return "_kregs";
    return "";
}

std::string cell_text(const SweepCell& c) { return c.slowdown ? format_short(*c.slowdown) : "NA"; }

std::string plot_rows(const SweepResult& r, const std::vector<ConfigPoint>& points, const std::string& x_header) {
    std::ostringstream out;
    out << "# " << x_header;
    for (const std::string& w : r.workloads) out << ' ' << w;
    out << " geomean\n";
    for (const ConfigPoint& p : points) {
        std::string x;
        for (const auto& [axis, value] : p.settings) {
            if (!x.empty()) x += '+';
            x += display_value(axis, value);
        }
        out << x;
        const auto& cells = r.entries.at(p);
        for (const std::string& w : r.workloads) out << ' ' << cell_text(cells.at(w));
        const auto g = r.geomean.at(p);
        out << ' ' << (g ? format_short(*g) : "NA") << '\n';
    }
    return out.str();
}

std::string axes_key(const std::vector<ParamAxis>& axes) {
    std::string out;
    for (ParamAxis a : axes) {
        if (!out.empty()) out += '+';
        out += to_string(a);
    }
    return out;
}

std::string x_header_for(const std::vector<ParamAxis>& axes) {
    std::string out;
    for (ParamAxis a : axes) {
        if (!out.empty()) out += '+';
        out += std::string(to_string(a)) + display_unit(a);
    }
    return out;
}

std::vector<ConfigPoint> points_with_key(const SweepResult& r, const std::string& key) {
    std::vector<ConfigPoint> out;
    for (const auto& [p, _] : r.entries) {
        if (p.axis_key() == key) out.push_back(p);
    }
    return out;
}

std::string platform_of(const GpuConfig& c) { return c.label.substr(0, c.label.find_first_of("+.")); }

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            line += i + 1 < row.size() ? pad(row[i], width[i] + 2) : row[i];
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace

std::string format_exact(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_short(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::vector<CsvRow> csv_rows(const SweepResult& r) {
    std::vector<CsvRow> rows;
    for (const auto& [p, cells] : r.entries) {
        for (const auto& [w, c] : cells) rows.push_back({p.axis_key(), p.value_key(), w, c.cycles, c.slowdown});
    }
    return rows;
}

std::string emit_csv(const SweepResult& r) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const CsvRow& row : csv_rows(r)) {
        out += csv_field(row.axis) + "," + csv_field(row.value) + "," + csv_field(row.workload) + ",";
        out += (row.cycles ? std::to_string(*row.cycles) : "NA") + ",";
        out += (row.slowdown ? format_exact(*row.slowdown) : "NA") + "\n";
    }
    return out;
}

std::vector<CsvRow> read_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw ParseError(std::string("csv: expected header '") + kCsvHeader + "'");
    }
    std::vector<CsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line, line_no);
        if (f.size() != 5) throw ParseError("csv line " + std::to_string(line_no) + ": expected 5 fields");
        CsvRow row{f[0], f[1], f[2], std::nullopt, std::nullopt};
        if (f[3] != "NA") {
            std::uint64_t c = 0;
            const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), c);
            if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size()) {
                throw ParseError("csv line " + std::to_string(line_no) + ": bad cycles '" + f[3] + "'");
            }
            row.cycles = c;
        }
        if (f[4] != "NA") {
            double s = 0;
            const auto res = std::from_chars(f[4].data(), f[4].data() + f[4].size(), s);
            if (res.ec != std::errc() || res.ptr != f[4].data() + f[4].size()) {
                throw ParseError("csv line " + std::to_string(line_no) + ": bad slowdown '" + f[4] + "'");
            }
            row.slowdown = s;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string emit_json(const SweepResult& r) { return to_json(r).dump(2) + "\n"; }

const std::vector<FigureSpec>& figure_catalog() {
    using A = ParamAxis;
    static const std::vector<FigureSpec> catalog = [] {
        std::vector<FigureSpec> c;
        const std::vector<A> tx2 = {A::l1_size, A::l1_assoc, A::l2_size, A::l2_assoc, A::cores_per_smb, A::regfile,
                                    A::shmem, A::warp_schedulers, A::smb_per_sm, A::sms_per_cluster, A::num_sms};
        const std::vector<std::vector<A>> multi = {
            {A::l1_assoc, A::l1_size},
            {A::l2_assoc, A::l2_size},
            {A::l1_size, A::l2_size},
            {A::l1_assoc, A::l2_assoc},
            {A::l1_assoc, A::l1_size, A::l2_assoc, A::l2_size},
            {A::num_sms, A::cores_per_smb},
        };
        for (std::size_t i = 0; i < tx2.size(); ++i) c.push_back({"fig3" + std::string(1, char('a' + i)), {tx2[i]}});
        for (std::size_t i = 0; i < multi.size(); ++i) c.push_back({"fig4" + std::string(1, char('a' + i)), multi[i]});
        std::vector<A> xavier = tx2;
        std::erase(xavier, A::shmem);
        for (std::size_t i = 0; i < xavier.size(); ++i) {
            c.push_back({"fig6" + std::string(1, char('a' + i)), {xavier[i]}});
        }
        for (std::size_t i = 0; i < multi.size(); ++i) c.push_back({"fig7" + std::string(1, char('a' + i)), multi[i]});
        return c;
    }();
    return catalog;
}

const FigureSpec& find_figure(const std::string& id) {
    for (const FigureSpec& f : figure_catalog()) {
        if (f.id == id) return f;
    }
    throw ConfigError("unknown figure id '" + id + "'");
}

std::vector<std::string> figures_for(const SweepResult& r) {
    const std::string platform = platform_of(r.base);
    std::string single, multi;
    if (platform == "tx2") {
        single = "fig3";
        multi = "fig4";
    } else if (platform == "xavier") {
        single = "fig6";
        multi = "fig7";
    } else {
        return {};
    }
    std::vector<std::string> out;
    for (const FigureSpec& f : figure_catalog()) {
        const std::string family = f.id.substr(0, 4);
        if (family != (f.axes.size() == 1 ? single : multi)) continue;
        if (!points_with_key(r, axes_key(f.axes)).empty()) out.push_back(f.id);
    }
    return out;
}

std::string emit_axis_data(const SweepResult& r, const std::string& key) {
    const auto points = points_with_key(r, key);
    if (points.empty() || key == "base") throw ConfigError("sweep result has no points for '" + key + "'");
    std::vector<ParamAxis> axes;
    for (const auto& [a, _] : points.front().settings) axes.push_back(a);
    return plot_rows(r, points, x_header_for(axes));
}

std::string emit_figure_data(const SweepResult& r, const std::string& figure_id) {
    const FigureSpec& f = find_figure(figure_id);
    const std::string key = axes_key(f.axes);
    if (points_with_key(r, key).empty()) {
        throw ConfigError("sweep result does not contain the axes of " + figure_id + " (" + key + ")");
    }
    return emit_axis_data(r, key);
}

std::string format_sweep_table(const SweepResult& r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"axis", "value", "geomean"};
    head.insert(head.end(), r.workloads.begin(), r.workloads.end());
    rows.push_back(std::move(head));
    for (const auto& [p, cells] : r.entries) {
        std::string shown;
        for (const auto& [axis, value] : p.settings) {
            if (!shown.empty()) shown += '+';
            shown += display_value(axis, value);
        }
        const auto g = r.geomean.at(p);
        std::vector<std::string> row{p.axis_key(), p.is_base() ? "-" : shown, g ? format_short(*g) : "NA"};
        for (const std::string& w : r.workloads) row.push_back(cell_text(cells.at(w)));
        rows.push_back(std::move(row));
    }
    return render_table(rows);
}

std::string format_classification(const std::vector<ParamClassification>& list) {
    std::vector<std::vector<std::string>> rows{{"parameter", "category", "limit"}};
    for (const ParamClassification& c : list) {
        std::string limit = "-";
        if (c.limit) {
            limit = display_value(c.param, *c.limit);
            if (is_size_axis(c.param)) limit += " KB";
            if (c.param == ParamAxis::regfile) limit += " K regs";
        }
        rows.push_back({std::string(to_string(c.param)), std::to_string(c.category), limit});
    }
    return render_table(rows);
}

std::string format_setups(const SetupComparison& cmp) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"setup"};
    head.insert(head.end(), cmp.workloads.begin(), cmp.workloads.end());
    head.insert(head.end(), {"geomean", "area_delta"});
    rows.push_back(std::move(head));
    for (const SetupRow& s : cmp.rows) {
        std::vector<std::string> row{s.name};
        for (const std::string& w : cmp.workloads) row.push_back(cell_text(s.cells.at(w)));
        row.push_back(s.geomean ? format_short(*s.geomean) : "NA");
        row.push_back(format_short(100.0 * s.area_delta_ratio) + "%");
        rows.push_back(std::move(row));
    }
    return render_table(rows);
}

std::string emit_setups_csv(const SetupComparison& cmp) {
    std::string out = "setup,workload,cycles,slowdown\n";
    for (const SetupRow& s : cmp.rows) {
        for (const std::string& w : cmp.workloads) {
            const SweepCell& c = s.cells.at(w);
            out += csv_field(s.name) + "," + csv_field(w) + ",";
            out += (c.cycles ? std::to_string(*c.cycles) : "NA") + ",";
            out += (c.slowdown ? format_exact(*c.slowdown) : "NA") + "\n";
        }
        out += csv_field(s.name) + ",geomean,NA," + (s.geomean ? format_exact(*s.geomean) : "NA") + "\n";
    }
    return out;
}

std::string emit_setups_figure(const SetupComparison& cmp) {
    std::ostringstream out;
    out << "# setup";
    for (const std::string& w : cmp.workloads) out << ' ' << w;
    out << " geomean\n";
    for (const SetupRow& s : cmp.rows) {
        out << s.name;
        for (const std::string& w : cmp.workloads) out << ' ' << cell_text(s.cells.at(w));
        out << ' ' << (s.geomean ? format_short(*s.geomean) : "NA") << '\n';
    }
    return out.str();
}

}  // namespace gpudse
