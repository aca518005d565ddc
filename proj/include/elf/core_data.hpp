#pragma once
// Logged datasets, conditional predicates and the stratified candidate/safety split.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace elf {

/// One logged record: features, true label, sensitive attribute, the behavior
/// model's logged prediction and the delayed impact observed after it.
struct LabeledExample {
    std::vector<double> x;
    int y = 0;
    int t = 0;
    int y_hat_beta = 0;
    double i_beta = 0.0;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t d, int num_labels, int num_groups)
        : d_(d), num_labels_(num_labels), num_groups_(num_groups) {
        if (num_labels < 1 || num_groups < 1) {
            throw std::invalid_argument("dataset needs at least one label and one group");
        }
    }

    std::size_t dim() const noexcept { return d_; }
    int num_labels() const noexcept { return num_labels_; }
    int num_groups() const noexcept { return num_groups_; }
    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }

    const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }
    const std::vector<LabeledExample>& examples() const noexcept { return examples_; }
    auto begin() const noexcept { return examples_.begin(); }
    auto end() const noexcept { return examples_.end(); }

    void reserve(std::size_t n) { examples_.reserve(n); }

    void add(LabeledExample ex) {
        validate(ex);
        examples_.push_back(std::move(ex));
    }

    /// Same dimensions, no examples.
    Dataset empty_like() const { return Dataset(d_, num_labels_, num_groups_); }

    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out = empty_like();
        out.examples_.reserve(indices.size());
        for (std::size_t i : indices) {
            out.examples_.push_back(examples_.at(i));
        }
        return out;
    }

private:
    void validate(const LabeledExample& ex) const {
        if (ex.x.size() != d_) {
            throw std::invalid_argument("example has " + std::to_string(ex.x.size()) +
                                        " features, dataset expects " + std::to_string(d_));
        }
        for (double v : ex.x) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
        }
        if (ex.y < 0 || ex.y >= num_labels_) throw std::invalid_argument("label out of range");
        if (ex.y_hat_beta < 0 || ex.y_hat_beta >= num_labels_) {
            throw std::invalid_argument("logged prediction out of range");
        }
        if (ex.t < 0 || ex.t >= num_groups_) throw std::invalid_argument("group out of range");
        if (!std::isfinite(ex.i_beta)) throw std::invalid_argument("non-finite delayed impact");
    }

    std::size_t d_ = 0;
    int num_labels_ = 2;
    int num_groups_ = 2;
    std::vector<LabeledExample> examples_;
};

// ---------------------------------------------------------------------------
// Conditional predicates c(X, Y, T)
// ---------------------------------------------------------------------------

class ConditionalPredicate {
public:
    enum class Kind { True, GroupEquals, LabelEquals, And };

    /// Matches everything.
    ConditionalPredicate() = default;

    static ConditionalPredicate always() { return ConditionalPredicate(Kind::True, 0, {}); }
    static ConditionalPredicate group_equals(int t) { return ConditionalPredicate(Kind::GroupEquals, t, {}); }
    static ConditionalPredicate label_equals(int y) { return ConditionalPredicate(Kind::LabelEquals, y, {}); }
    static ConditionalPredicate all_of(std::vector<ConditionalPredicate> terms) {
        return ConditionalPredicate(Kind::And, 0, std::move(terms));
    }

    Kind kind() const noexcept { return kind_; }
    int value() const noexcept { return value_; }
    const std::vector<ConditionalPredicate>& terms() const noexcept { return terms_; }

    bool operator()(int y, int t) const {
        switch (kind_) {
            case Kind::True: return true;
            case Kind::GroupEquals: return t == value_;
            case Kind::LabelEquals: return y == value_;
            case Kind::And:
                return std::all_of(terms_.begin(), terms_.end(),
                                   [&](const ConditionalPredicate& p) { return p(y, t); });
        }
        return false;
    }

    friend bool operator==(const ConditionalPredicate&, const ConditionalPredicate&) = default;

private:
    ConditionalPredicate(Kind k, int v, std::vector<ConditionalPredicate> terms)
        : kind_(k), value_(v), terms_(std::move(terms)) {}

    Kind kind_ = Kind::True;
    int value_ = 0;
    std::vector<ConditionalPredicate> terms_;
};

inline bool evaluate_predicate(const ConditionalPredicate& p, const LabeledExample& ex) {
    return p(ex.y, ex.t);
}

// {"group": 1}, {"label": 0}, {"and": [...]}, "true" / {"true": true}
inline void to_json(nlohmann::json& j, const ConditionalPredicate& p) {
    using K = ConditionalPredicate::Kind;
    switch (p.kind()) {
        case K::True: j = nlohmann::json{{"true", true}}; break;
        case K::GroupEquals: j = nlohmann::json{{"group", p.value()}}; break;
        case K::LabelEquals: j = nlohmann::json{{"label", p.value()}}; break;
        case K::And: {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& term : p.terms()) terms.push_back(term);
            j = nlohmann::json{{"and", terms}};
            break;
        }
    }
}

inline void from_json(const nlohmann::json& j, ConditionalPredicate& p) {
    if (j.is_string() && j.get<std::string>() == "true") {
        p = ConditionalPredicate::always();
    } else if (j.is_object() && j.size() == 1) {
        if (j.contains("true")) {
            p = ConditionalPredicate::always();
        } else if (j.contains("group")) {
            p = ConditionalPredicate::group_equals(j.at("group").get<int>());
        } else if (j.contains("label")) {
            p = ConditionalPredicate::label_equals(j.at("label").get<int>());
        } else if (j.contains("and")) {
            std::vector<ConditionalPredicate> terms;
            for (const auto& term : j.at("and")) terms.push_back(term.get<ConditionalPredicate>());
            p = ConditionalPredicate::all_of(std::move(terms));
        } else {
            throw std::invalid_argument("unknown predicate: " + j.dump());
        }
    } else {
        throw std::invalid_argument("malformed predicate: " + j.dump());
    }
}

// ---------------------------------------------------------------------------
// Stratified partition
// ---------------------------------------------------------------------------

struct Partition {
    Dataset candidate;
    Dataset safety;
};

/// Splits `data` into candidate and safety sets, stratified on (t, y).
/// Each stratum contributes floor(fraction * size) candidates; the leftover
/// candidate slots needed to reach round(fraction * n) go to the strata with
/// the largest fractional remainders, so every stratum stays within one
/// example of its exact share.
inline Partition stratified_partition(const Dataset& data, double candidate_fraction, std::uint64_t seed) {
    if (!(candidate_fraction > 0.0 && candidate_fraction < 1.0)) {
        throw std::invalid_argument("candidate_fraction must lie in (0, 1)");
    }
    if (data.empty()) throw std::invalid_argument("cannot partition an empty dataset");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < data.size(); ++i) {
        strata[{data[i].t, data[i].y}].push_back(i);
    }

    std::mt19937_64 rng(seed);
    struct Share {
        std::vector<std::size_t>* members;
        std::size_t take;
        double remainder;
        std::size_t order;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (auto& [key, members] : strata) {
        std::shuffle(members.begin(), members.end(), rng);
        const double exact = candidate_fraction * static_cast<double>(members.size());
        const auto take = static_cast<std::size_t>(std::floor(exact));
        shares.push_back({&members, take, exact - static_cast<double>(take), shares.size()});
        assigned += take;
    }

    const auto target = static_cast<std::size_t>(std::llround(candidate_fraction * static_cast<double>(data.size())));
    std::vector<Share*> by_remainder;
    for (auto& s : shares) by_remainder.push_back(&s);
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [](const Share* a, const Share* b) { return a->remainder > b->remainder; });
    for (Share* s : by_remainder) {
        if (assigned >= target) break;
        if (s->remainder > 0.0) {
            ++s->take;
            ++assigned;
        }
    }
    // A lone example (or an all-tiny split) still needs a candidate set.
    if (assigned == 0) {
        by_remainder.front()->take = 1;
    }

    std::vector<std::size_t> cand, safe;
    for (const auto& s : shares) {
        cand.insert(cand.end(), s.members->begin(), s.members->begin() + static_cast<std::ptrdiff_t>(s.take));
        safe.insert(safe.end(), s.members->begin() + static_cast<std::ptrdiff_t>(s.take), s.members->end());
    }
    if (safe.empty()) throw std::invalid_argument("partition leaves the safety set empty");
    std::sort(cand.begin(), cand.end());
    std::sort(safe.begin(), safe.end());
    return {data.subset(cand), data.subset(safe)};
}

// ---------------------------------------------------------------------------
// CSV: x0..x{d-1},y,t,yhat_beta,i_beta
// ---------------------------------------------------------------------------

inline std::string csv_header(std::size_t d) {
    std::string h;
    for (std::size_t k = 0; k < d; ++k) h += "x" + std::to_string(k) + ",";
    return h + "y,t,yhat_beta,i_beta";
}

inline void write_csv(std::ostream& os, const Dataset& data) {
    os << csv_header(data.dim()) << '\n';
    os << std::setprecision(17);
    for (const auto& ex : data) {
        for (double v : ex.x) os << v << ',';
        os << ex.y << ',' << ex.t << ',' << ex.y_hat_beta << ',' << ex.i_beta << '\n';
    }
}

inline void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os, data);
}

/// Label and group counts are inferred from the data unless given.
inline Dataset read_csv(std::istream& is, int num_labels = 0, int num_groups = 0) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("dataset CSV is empty");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 4) throw std::runtime_error("dataset CSV header too short");
    const std::size_t d = header.size() - 4;
    if (line != csv_header(d)) throw std::runtime_error("unexpected dataset CSV header: " + line);

    std::vector<LabeledExample> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != d + 4) {
            throw std::runtime_error("dataset CSV line " + std::to_string(lineno) + " has wrong column count");
        }
        LabeledExample ex;
        ex.x.resize(d);
        try {
            for (std::size_t k = 0; k < d; ++k) ex.x[k] = std::stod(cells[k]);
            ex.y = std::stoi(cells[d]);
            ex.t = std::stoi(cells[d + 1]);
            ex.y_hat_beta = std::stoi(cells[d + 2]);
            ex.i_beta = std::stod(cells[d + 3]);
        } catch (const std::logic_error&) {
            throw std::runtime_error("dataset CSV line " + std::to_string(lineno) + " is not numeric");
        }
        rows.push_back(std::move(ex));
    }
    int max_label = 1, max_group = 1;
    for (const auto& ex : rows) {
        max_label = std::max({max_label, ex.y, ex.y_hat_beta});
        max_group = std::max(max_group, ex.t);
    }
    Dataset data(d, num_labels > 0 ? num_labels : max_label + 1, num_groups > 0 ? num_groups : max_group + 1);
    data.reserve(rows.size());
    for (auto& ex : rows) data.add(std::move(ex));
    return data;
}

inline Dataset read_csv(const std::string& path, int num_labels = 0, int num_groups = 0) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_csv(is, num_labels, num_groups);
}

}  // namespace elf
