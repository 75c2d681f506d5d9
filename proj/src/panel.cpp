#include "vcdp/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vcdp/error.hpp"

namespace vcdp {

std::string group_label(Group g) { return g == Group::kControl ? "C0" : "C1"; }

void PanelSchema::validate() const {
    if (p < 0 || p_h < 0 || q < 1 || n < 2 || m < 2 || n0 < 1 || n1 < 1) {
        std::ostringstream os;
        os << "invalid panel schema (p=" << p << ", q=" << q << ", p_h=" << p_h << ", n=" << n
           << ", m=" << m << ", N0=" << n0 << ", N1=" << n1 << ")";
        throw Error(ErrorCode::kInvalidSchema, os.str());
    }
}

GroupSeries::GroupSeries(int n, int m, int p, int q, int p_h)
    : n_(n), m_(m), p_(p), q_(q), p_h_(p_h) {
    const auto cells = static_cast<std::size_t>(n) * m;
    y_.assign(cells, 0.0);
    x_.assign(cells * p, 0.0);
    s_.assign(cells * q, 0.0);
    xt_.assign(cells * p_h, 0.0);
}

Panel Panel::zeros(const PanelSchema& schema, std::string city, std::string period) {
    schema.validate();
    Panel panel;
    panel.schema = schema;
    panel.city = std::move(city);
    panel.period = std::move(period);
    for (auto& g : panel.groups) g = GroupSeries(schema.n, schema.m, schema.p, schema.q, schema.p_h);
    panel.f.assign(static_cast<std::size_t>(schema.n) * schema.m, 0.0);
    return panel;
}

namespace {

constexpr double kSupplyTolerance = 1e-9;

std::string cell_label(int d, int t, Group g) {
    std::ostringstream os;
    os << "(d=" << d + 1 << ",t=" << t + 1 << ",C=" << group_label(g) << ")";
    return os.str();
}

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "non-finite value in " + what);
}

std::vector<std::string> expected_header(const PanelSchema& s) {
    std::vector<std::string> cols{"city", "period", "day", "interval", "group", "y"};
    for (int i = 1; i <= s.q; ++i) cols.push_back("s_" + std::to_string(i));
    for (int i = 1; i <= s.p; ++i) cols.push_back("x_" + std::to_string(i));
    for (int i = 1; i <= s.p_h; ++i) cols.push_back("xt_" + std::to_string(i));
    cols.push_back("f");
    return cols;
}

std::vector<std::string> split_fields(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& field, std::size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) + ": cannot parse number '" + field + "'");
    }
    return v;
}

int parse_index(const std::string& field, std::size_t line_no) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || v < 1) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) + ": bad 1-based index '" + field + "'");
    }
    return v;
}

Group parse_group(const std::string& field, std::size_t line_no) {
    if (field == "C0") return Group::kControl;
    if (field == "C1") return Group::kTreated;
    throw Error(ErrorCode::kParse,
                "line " + std::to_string(line_no) + ": group must be C0 or C1, got '" + field + "'");
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open panel file '" + path.string() + "'");
    return in;
}

void append_number(std::string& out, double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

template <typename Fn>
void for_each_covariate_block(Panel& panel, Fn&& fn) {
    fn([](GroupSeries& g, int d, int t) { return g.x(d, t); }, panel.schema.p);
    fn([](GroupSeries& g, int d, int t) { return g.xt(d, t); }, panel.schema.p_h);
}

}  // namespace

void validate_panel(const Panel& panel) {
    const auto& s = panel.schema;
    s.validate();
    const auto cells = static_cast<std::size_t>(s.n) * s.m;
    if (panel.f.size() != cells) throw Error(ErrorCode::kDimensionMismatch, "fraction array has wrong size");
    for (int d = 0; d < s.n; ++d) {
        for (int t = 0; t < s.m; ++t) {
            const double f = panel.fraction(d, t);
            require_finite(f, "f" + cell_label(d, t, Group::kControl));
            if (f < 0.0 || f > 1.0) {
                throw Error(ErrorCode::kFractionOutOfRange,
                            "treated fraction " + std::to_string(f) + " outside [0,1] at " +
                                cell_label(d, t, Group::kControl));
            }
            for (Group g : kGroups) {
                const auto& gs = panel.group(g);
                const auto where = cell_label(d, t, g);
                require_finite(gs.y(d, t), "y" + where);
                for (double v : gs.x(d, t)) require_finite(v, "x" + where);
                for (double v : gs.s(d, t)) require_finite(v, "s" + where);
                for (double v : gs.xt(d, t)) require_finite(v, "xt" + where);
            }
            if (s.shared_supply) {
                const double a = panel.group(Group::kControl).s(d, t)[s.q - 1];
                const double b = panel.group(Group::kTreated).s(d, t)[s.q - 1];
                if (std::abs(a - b) > kSupplyTolerance) {
                    std::ostringstream os;
                    os << "shared supply differs across groups at (d=" << d + 1 << ",t=" << t + 1
                       << "): " << a << " vs " << b;
                    throw Error(ErrorCode::kSupplyMismatch, os.str());
                }
            }
        }
    }
}

PanelSchema infer_schema(const std::filesystem::path& path, std::int64_t n0, std::int64_t n1,
                         bool shared_supply) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kBadHeader, "empty panel file '" + path.string() + "'");
    PanelSchema schema;
    schema.n0 = n0;
    schema.n1 = n1;
    schema.shared_supply = shared_supply;
    schema.q = schema.p = schema.p_h = 0;
    for (const auto& col : split_fields(line)) {
        if (col.rfind("xt_", 0) == 0) ++schema.p_h;
        else if (col.rfind("x_", 0) == 0) ++schema.p;
        else if (col.rfind("s_", 0) == 0) ++schema.q;
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() < 4) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": too few fields");
        schema.n = std::max(schema.n, parse_index(fields[2], line_no));
        schema.m = std::max(schema.m, parse_index(fields[3], line_no));
    }
    return schema;
}

Panel load_panel(const std::filesystem::path& path, const PanelSchema& requested) {
    PanelSchema schema = requested;
    if (schema.n <= 0 || schema.m <= 0) {
        const auto found = infer_schema(path, schema.n0, schema.n1, schema.shared_supply);
        if (schema.n <= 0) schema.n = found.n;
        if (schema.m <= 0) schema.m = found.m;
    }
    schema.validate();

    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kBadHeader, "empty panel file '" + path.string() + "'");
    const auto header = split_fields(line);
    const auto expected = expected_header(schema);
    if (header != expected) {
        std::string want;
        for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
        throw Error(ErrorCode::kBadHeader, "header of '" + path.string() + "' does not match schema; expected " + want);
    }

    Panel panel = Panel::zeros(schema);
    std::vector<char> seen(static_cast<std::size_t>(schema.n) * schema.m * 2, 0);
    std::vector<char> f_seen(static_cast<std::size_t>(schema.n) * schema.m, 0);
    bool meta_set = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != expected.size()) {
            throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(expected.size()) + " fields, got " +
                                               std::to_string(fields.size()));
        }
        if (!meta_set) {
            panel.city = fields[0];
            panel.period = fields[1];
            meta_set = true;
        } else if (fields[0] != panel.city || fields[1] != panel.period) {
            throw Error(ErrorCode::kInconsistentMeta,
                        "line " + std::to_string(line_no) + ": city/period differ from the first row");
        }
        const int d = parse_index(fields[2], line_no) - 1;
        const int t = parse_index(fields[3], line_no) - 1;
        if (d >= schema.n || t >= schema.m) {
            throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": day/interval outside schema");
        }
        const Group g = parse_group(fields[4], line_no);
        const auto key = (static_cast<std::size_t>(d) * schema.m + t) * 2 + index_of(g);
        if (seen[key]) throw Error(ErrorCode::kDuplicateCell, "duplicate cell " + cell_label(d, t, g));
        seen[key] = 1;

        auto& gs = panel.group(g);
        std::size_t col = 5;
        gs.y(d, t) = parse_double(fields[col++], line_no);
        for (auto& v : gs.s(d, t)) v = parse_double(fields[col++], line_no);
        for (auto& v : gs.x(d, t)) v = parse_double(fields[col++], line_no);
        for (auto& v : gs.xt(d, t)) v = parse_double(fields[col++], line_no);
        const double f = parse_double(fields[col], line_no);
        const auto fkey = static_cast<std::size_t>(d) * schema.m + t;
        if (f_seen[fkey] && panel.f[fkey] != f) {
            throw Error(ErrorCode::kInconsistentFraction,
                        "treated fraction differs between groups at " + cell_label(d, t, g));
        }
        f_seen[fkey] = 1;
        panel.f[fkey] = f;
    }

    for (int d = 0; d < schema.n; ++d)
        for (int t = 0; t < schema.m; ++t)
            for (Group g : kGroups)
                if (!seen[(static_cast<std::size_t>(d) * schema.m + t) * 2 + index_of(g)])
                    throw Error(ErrorCode::kMissingCell, "missing cell " + cell_label(d, t, g));

    validate_panel(panel);
    return panel;
}

std::string panel_csv(const Panel& panel) {
    validate_panel(panel);
    const auto& s = panel.schema;
    std::string out;
    const auto header = expected_header(s);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (int d = 0; d < s.n; ++d) {
        for (int t = 0; t < s.m; ++t) {
            for (Group g : kGroups) {
                const auto& gs = panel.group(g);
                out += panel.city + ',' + panel.period + ',' + std::to_string(d + 1) + ',' +
                       std::to_string(t + 1) + ',' + group_label(g) + ',';
                append_number(out, gs.y(d, t));
                for (double v : gs.s(d, t)) { out += ','; append_number(out, v); }
                for (double v : gs.x(d, t)) { out += ','; append_number(out, v); }
                for (double v : gs.xt(d, t)) { out += ','; append_number(out, v); }
                out += ',';
                append_number(out, panel.fraction(d, t));
                out += '\n';
            }
        }
    }
    return out;
}

void write_panel(const Panel& panel, const std::filesystem::path& path) {
    const std::string out = panel_csv(panel);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::kIo, "cannot write panel file '" + path.string() + "'");
    os << out;
    if (!os) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

double compute_gap(double demand, double supply) {
    if (!std::isfinite(demand) || !std::isfinite(supply)) {
        throw Error(ErrorCode::kNonFiniteValue, "compute_gap: non-finite demand or supply");
    }
    return std::max(demand - supply, 0.0);
}

Panel append_gap_covariate(const Panel& panel) {
    PanelSchema schema = panel.schema;
    schema.p += 1;
    Panel out = Panel::zeros(schema, panel.city, panel.period);
    out.f = panel.f;
    for (Group g : kGroups) {
        const auto& src = panel.group(g);
        auto& dst = out.group(g);
        for (int d = 0; d < schema.n; ++d) {
            for (int t = 0; t < schema.m; ++t) {
                dst.y(d, t) = src.y(d, t);
                std::ranges::copy(src.s(d, t), dst.s(d, t).begin());
                std::ranges::copy(src.xt(d, t), dst.xt(d, t).begin());
                auto x = dst.x(d, t);
                std::ranges::copy(src.x(d, t), x.begin());
                const auto st = src.s(d, t);
                x[schema.p - 1] = compute_gap(st.front(), st.back());
            }
        }
    }
    return out;
}

Panel center_covariates(const Panel& panel) {
    validate_panel(panel);
    Panel out = panel;
    const auto& s = panel.schema;
    const double w0 = s.weight_of(Group::kControl);
    const double w1 = s.weight_of(Group::kTreated);
    for_each_covariate_block(out, [&](auto block, int width) {
        for (int t = 0; t < s.m; ++t) {
            for (int j = 0; j < width; ++j) {
                double mean = 0.0;
                for (int d = 0; d < s.n; ++d) {
                    mean += w0 * block(out.group(Group::kControl), d, t)[j] +
                            w1 * block(out.group(Group::kTreated), d, t)[j];
                }
                mean /= s.n;
                for (Group g : kGroups)
                    for (int d = 0; d < s.n; ++d) block(out.group(g), d, t)[j] -= mean;
            }
        }
    });
    return out;
}

}  // namespace vcdp
