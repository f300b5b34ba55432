#pragma once

// LIBSVM text parsing, label binarization, [-1, 1] feature scaling and seeded
// streams.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soauc/core.hpp"
#include "soauc/rng.hpp"

namespace soauc {

struct LabeledInstance {
    Vector x;
    int y = 1;  // -1 or +1
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Dense rows with labels exactly as read.
struct RawDataset {
    std::vector<double> labels;
    std::vector<Vector> rows;
    std::size_t dim = 0;
};

struct Dataset {
    std::vector<LabeledInstance> instances;
    std::size_t dim = 0;

    std::size_t positives() const noexcept {
        return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(),
                                                       [](const auto& z) { return z.y == 1; }));
    }
    std::size_t negatives() const noexcept { return instances.size() - positives(); }
    /// N- / N+
    double imbalance_ratio() const noexcept {
        const auto p = positives();
        return p == 0 ? 0.0 : static_cast<double>(negatives()) / static_cast<double>(p);
    }
    std::vector<int> labels() const {
        std::vector<int> y;
        y.reserve(instances.size());
        for (const auto& z : instances) y.push_back(z.y);
        return y;
    }
    Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset d;
        d.dim = dim;
        d.instances.reserve(idx.size());
        for (auto i : idx) d.instances.push_back(instances.at(i));
        return d;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view tok) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses `<label> <index>:<value> ...` lines. Indices are 1-based and strictly
/// increasing; `#` starts a comment; blank lines are skipped. Rows are
/// materialized densely with dimension max(max index, dimension_hint).
inline RawDataset parse_libsvm(std::string_view text, std::optional<std::size_t> dimension_hint = std::nullopt) {
    struct SparseRow {
        double label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<SparseRow> sparse;
    std::size_t max_index = 0;
    std::size_t line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        std::istringstream tokens{std::string(line)};
        std::string tok;
        tokens >> tok;
        const auto label = detail::parse_double(tok);
        if (!label) throw ParseError(line_no, "non-numeric label '" + tok + "'");

        SparseRow row{*label, {}};
        std::size_t last = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError(line_no, "expected index:value, got '" + tok + "'");
            const std::string_view idx_s(tok.data(), colon);
            std::size_t index = 0;
            const auto [p, ec] = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), index);
            if (ec != std::errc() || p != idx_s.data() + idx_s.size())
                throw ParseError(line_no, "bad feature index '" + std::string(idx_s) + "'");
            if (index < 1) throw ParseError(line_no, "feature index must be >= 1");
            if (index <= last) throw ParseError(line_no, "feature indices must be strictly increasing");
            const auto value = detail::parse_double(std::string_view(tok).substr(colon + 1));
            if (!value) throw ParseError(line_no, "non-numeric value '" + tok.substr(colon + 1) + "'");
            row.entries.emplace_back(index, *value);
            last = index;
        }
        max_index = std::max(max_index, last);
        sparse.push_back(std::move(row));
    }

    RawDataset raw;
    raw.dim = std::max(max_index, dimension_hint.value_or(0));
    raw.labels.reserve(sparse.size());
    raw.rows.reserve(sparse.size());
    for (const auto& r : sparse) {
        Vector x(raw.dim);
        for (const auto& [i, v] : r.entries) x[i - 1] = v;
        raw.labels.push_back(r.label);
        raw.rows.push_back(std::move(x));
    }
    return raw;
}

inline RawDataset load_libsvm(const std::string& path, std::optional<std::size_t> dimension_hint = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_libsvm(ss.str(), dimension_hint);
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

/// Writes nonzero entries only; parse_libsvm(serialize_libsvm(d), d.dim) == d.
inline std::string serialize_libsvm(const RawDataset& d) {
    std::string out;
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
        out += format_double(d.labels[r]);
        for (std::size_t i = 0; i < d.rows[r].size(); ++i) {
            if (d.rows[r][i] != 0.0) out += " " + std::to_string(i + 1) + ":" + format_double(d.rows[r][i]);
        }
        out += '\n';
    }
    return out;
}

/// Which raw labels become +1.
struct PositiveRule {
    enum class Mode { Explicit, AutoMinority };
    Mode mode = Mode::AutoMinority;
    /// Explicit: the positive set. AutoMinority: one side of the binary
    /// grouping (the other side is everything else); empty means the raw labels
    /// must already be binary and the first-sorted label forms one side.
    std::set<double> labels;

    static PositiveRule explicit_set(std::set<double> s) { return {Mode::Explicit, std::move(s)}; }
    static PositiveRule auto_minority(std::set<double> group = {}) { return {Mode::AutoMinority, std::move(group)}; }
};

inline Dataset binarize(const RawDataset& raw, const PositiveRule& rule) {
    std::map<double, std::size_t> counts;
    for (double l : raw.labels) ++counts[l];
    if (counts.size() < 2) throw std::invalid_argument("binarize: need at least two distinct labels");

    std::set<double> positive = rule.labels;
    if (rule.mode == PositiveRule::Mode::AutoMinority) {
        std::set<double> side = rule.labels;
        if (side.empty()) {
            if (counts.size() != 2)
                throw std::invalid_argument("binarize: auto-minority on multiclass data needs a label grouping");
            side.insert(counts.begin()->first);
        }
        std::size_t in_side = 0;
        for (const auto& [l, c] : counts)
            if (side.count(l)) in_side += c;
        const std::size_t other = raw.labels.size() - in_side;
        if (in_side <= other) {
            positive = side;
        } else {
            positive.clear();
            for (const auto& [l, c] : counts)
                if (!side.count(l)) positive.insert(l);
        }
    }

    Dataset d;
    d.dim = raw.dim;
    d.instances.reserve(raw.rows.size());
    for (std::size_t i = 0; i < raw.rows.size(); ++i)
        d.instances.push_back({raw.rows[i], positive.count(raw.labels[i]) ? 1 : -1});
    if (d.positives() == 0 || d.negatives() == 0)
        throw std::invalid_argument("binarize: result has a single class");
    return d;
}

struct ScalingParams {
    std::vector<std::pair<double, double>> ranges;  // per column (min, max)
};

inline Dataset apply_scaling(const Dataset& d, const ScalingParams& params) {
    require_same_dim(d.dim, params.ranges.size(), "apply_scaling");
    Dataset out = d;
    for (auto& z : out.instances) {
        for (std::size_t j = 0; j < d.dim; ++j) {
            const auto [lo, hi] = params.ranges[j];
            z.x[j] = hi > lo ? 2.0 * (z.x[j] - lo) / (hi - lo) - 1.0 : 0.0;
        }
    }
    return out;
}

inline ScalingParams fit_scaling(const Dataset& d) {
    if (d.instances.empty()) throw std::invalid_argument("scale_features: empty dataset");
    ScalingParams params;
    params.ranges.resize(d.dim, {0.0, 0.0});
    for (std::size_t j = 0; j < d.dim; ++j) {
        double lo = d.instances.front().x[j], hi = lo;
        for (const auto& z : d.instances) {
            lo = std::min(lo, z.x[j]);
            hi = std::max(hi, z.x[j]);
        }
        params.ranges[j] = {lo, hi};
    }
    return params;
}

/// Per column x' = 2 (x - min) / (max - min) - 1; constant columns map to 0.
inline std::pair<Dataset, ScalingParams> scale_features(const Dataset& d) {
    auto params = fit_scaling(d);
    return {apply_scaling(d, params), std::move(params)};
}

inline std::vector<LabeledInstance> shuffled_stream(const Dataset& d, std::uint64_t seed) {
    const auto perm = seeded_permutation(d.instances.size(), seed);
    std::vector<LabeledInstance> out;
    out.reserve(perm.size());
    for (auto i : perm) out.push_back(d.instances[i]);
    return out;
}

}  // namespace soauc
