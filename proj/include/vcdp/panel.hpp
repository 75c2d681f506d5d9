#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vcdp {

/// Group index. The API uses 0-based day and interval indices throughout;
/// only the CSV layer and error messages speak 1-based.
enum class Group : int { kControl = 0, kTreated = 1 };

inline constexpr std::array<Group, 2> kGroups{Group::kControl, Group::kTreated};

inline int index_of(Group g) { return static_cast<int>(g); }
std::string group_label(Group g);  // "C0" / "C1"

struct PanelSchema {
    int p = 0;    // outcome-model covariates
    int q = 2;    // state components; demand first, supply last
    int p_h = 0;  // state-model covariates
    int n = 0;    // days
    int m = 0;    // intervals per day
    std::int64_t n0 = 1;
    std::int64_t n1 = 1;
    // When set, the last state coordinate (supply) must agree across groups.
    bool shared_supply = true;

    std::int64_t total_size() const { return n0 + n1; }
    double treated_share() const { return static_cast<double>(n1) / static_cast<double>(n0 + n1); }
    std::int64_t size_of(Group g) const { return g == Group::kControl ? n0 : n1; }
    double weight_of(Group g) const {
        return static_cast<double>(size_of(g)) / static_cast<double>(total_size());
    }

    void validate() const;
    friend bool operator==(const PanelSchema&, const PanelSchema&) = default;
};

/// Day-by-interval arrays of one group's aggregates.
class GroupSeries {
public:
    GroupSeries() = default;
    GroupSeries(int n, int m, int p, int q, int p_h);

    double& y(int d, int t) { return y_[cell(d, t)]; }
    double y(int d, int t) const { return y_[cell(d, t)]; }

    std::span<double> x(int d, int t) { return {x_.data() + cell(d, t) * p_, static_cast<std::size_t>(p_)}; }
    std::span<const double> x(int d, int t) const {
        return {x_.data() + cell(d, t) * p_, static_cast<std::size_t>(p_)};
    }
    std::span<double> s(int d, int t) { return {s_.data() + cell(d, t) * q_, static_cast<std::size_t>(q_)}; }
    std::span<const double> s(int d, int t) const {
        return {s_.data() + cell(d, t) * q_, static_cast<std::size_t>(q_)};
    }
    std::span<double> xt(int d, int t) {
        return {xt_.data() + cell(d, t) * p_h_, static_cast<std::size_t>(p_h_)};
    }
    std::span<const double> xt(int d, int t) const {
        return {xt_.data() + cell(d, t) * p_h_, static_cast<std::size_t>(p_h_)};
    }

    friend bool operator==(const GroupSeries&, const GroupSeries&) = default;

private:
    std::size_t cell(int d, int t) const { return static_cast<std::size_t>(d) * m_ + t; }

    int n_ = 0, m_ = 0, p_ = 0, q_ = 0, p_h_ = 0;
    std::vector<double> y_, x_, s_, xt_;
};

/// Aggregated experiment data for one city and one period.
struct Panel {
    PanelSchema schema;
    std::string city = "city";
    std::string period = "experiment";
    std::array<GroupSeries, 2> groups;
    std::vector<double> f;  // treated fraction, n*m, row-major by day

    /// Zero-filled panel with the schema's dimensions.
    static Panel zeros(const PanelSchema& schema, std::string city = "city",
                       std::string period = "experiment");

    GroupSeries& group(Group g) { return groups[index_of(g)]; }
    const GroupSeries& group(Group g) const { return groups[index_of(g)]; }
    double& fraction(int d, int t) { return f[static_cast<std::size_t>(d) * schema.m + t]; }
    double fraction(int d, int t) const { return f[static_cast<std::size_t>(d) * schema.m + t]; }

    friend bool operator==(const Panel&, const Panel&) = default;
};

/// Checks every Panel invariant; throws vcdp::Error on the first violation.
void validate_panel(const Panel& panel);

/// Reads dimensions (p, q, p_h from the header; n, m from the rows) and
/// combines them with the caller's group sizes and shared-supply flag.
PanelSchema infer_schema(const std::filesystem::path& path, std::int64_t n0, std::int64_t n1,
                         bool shared_supply);

/// Loads a CSV panel. schema.n / schema.m may be 0, meaning "take the largest
/// day / interval present in the file".
Panel load_panel(const std::filesystem::path& path, const PanelSchema& schema);
void write_panel(const Panel& panel, const std::filesystem::path& path);
std::string panel_csv(const Panel& panel);

/// max(demand - supply, 0).
double compute_gap(double demand, double supply);

/// Returns a copy whose last outcome covariate is the supply-demand gap
/// computed from the first (demand) and last (supply) state coordinates.
Panel append_gap_covariate(const Panel& panel);

/// Subtracts, per interval and coordinate, the all-subject mean of X and X~
/// (group weight N_k / N, simple average over days).
Panel center_covariates(const Panel& panel);

}  // namespace vcdp
