#pragma once

#include "gcirc/hill.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gcirc {

enum class SpeciesKind { state, clamped_input };
enum class RegulationMode { activation, repression };

struct Species {
    std::string id;
    double degradation_rate = 0.0; ///< first-order, per minute; unused for inputs
    SpeciesKind kind = SpeciesKind::state;
    double initial_concentration = 0.0; ///< molar
};

/// One Hill-type edge from a regulator onto a transcription unit's promoter.
struct RegulationTerm {
    std::string regulator;
    RegulationMode mode = RegulationMode::activation;
    double hill_constant = 0.0;    ///< molar
    double hill_coefficient = 1.0; ///< dimensionless
};

struct ProductSpec {
    std::string product;
    double max_rate = 0.0; ///< molar per minute
};

/// A promoter and the proteins it drives.  Terms multiply; several products
/// model a polycistronic gene sharing the same regulation.
struct TranscriptionUnit {
    std::string id;
    std::vector<RegulationTerm> terms;
    std::vector<ProductSpec> products;
};

struct CircuitModel {
    std::vector<Species> species;
    std::vector<TranscriptionUnit> units;
    std::map<std::string, double, std::less<>> input_values;

    const Species* find_species(std::string_view id) const
    {
        auto it = std::find_if(species.begin(), species.end(),
                               [&](const Species& s) { return s.id == id; });
        return it == species.end() ? nullptr : &*it;
    }

    std::vector<std::string> state_ids() const
    {
        std::vector<std::string> ids;
        for (const auto& s : species)
            if (s.kind == SpeciesKind::state)
                ids.push_back(s.id);
        return ids;
    }

    std::vector<std::string> input_ids() const
    {
        std::vector<std::string> ids;
        for (const auto& s : species)
            if (s.kind == SpeciesKind::clamped_input)
                ids.push_back(s.id);
        return ids;
    }

    double input_value(std::string_view id) const
    {
        auto it = input_values.find(id);
        return it == input_values.end() ? 0.0 : it->second;
    }

    /// Copy with one clamped input set to `value`.
    CircuitModel with_input(std::string_view id, double value) const
    {
        CircuitModel copy = *this;
        copy.input_values.insert_or_assign(std::string(id), value);
        return copy;
    }
};

// ---------------------------------------------------------------------------
// Validation

enum class DiagnosticCode {
    empty_model,
    duplicate_id,
    unresolved_reference,
    parameter_range,
    duplicate_term,
    missing_products,
    produced_input,
    not_an_input,
};

inline std::string_view to_string(DiagnosticCode c)
{
    switch (c) {
    case DiagnosticCode::empty_model: return "empty-model";
    case DiagnosticCode::duplicate_id: return "duplicate-id";
    case DiagnosticCode::unresolved_reference: return "unresolved-reference";
    case DiagnosticCode::parameter_range: return "parameter-range";
    case DiagnosticCode::duplicate_term: return "duplicate-term";
    case DiagnosticCode::missing_products: return "missing-products";
    case DiagnosticCode::produced_input: return "produced-input";
    case DiagnosticCode::not_an_input: return "not-an-input";
    }
    return "unknown";
}

struct Diagnostic {
    DiagnosticCode code;
    std::string element; ///< offending element, e.g. "unit gene1 / term TF"
    std::string message;
};

namespace detail {

inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace detail

/// Returns every problem found in `model`; empty means the model is usable.
inline std::vector<Diagnostic> validate(const CircuitModel& model)
{
    std::vector<Diagnostic> out;
    auto emit = [&](DiagnosticCode c, std::string element, std::string msg) {
        out.push_back({c, std::move(element), std::move(msg)});
    };

    std::map<std::string_view, const Species*, std::less<>> by_id;
    std::size_t n_state = 0;
    for (const auto& s : model.species) {
        const std::string el = "species " + s.id;
        if (!by_id.emplace(s.id, &s).second)
            emit(DiagnosticCode::duplicate_id, el, "species id declared more than once");
        if (s.kind == SpeciesKind::state) {
            ++n_state;
            if (!detail::positive_finite(s.degradation_rate))
                emit(DiagnosticCode::parameter_range, el, "degradation rate must be positive");
            if (!(std::isfinite(s.initial_concentration) && s.initial_concentration >= 0.0))
                emit(DiagnosticCode::parameter_range, el,
                     "initial concentration must be nonnegative");
        }
    }
    if (n_state == 0)
        emit(DiagnosticCode::empty_model, "model", "model declares no state species");

    std::set<std::string_view> unit_ids;
    for (const auto& u : model.units) {
        const std::string uel = "unit " + u.id;
        if (!unit_ids.insert(u.id).second)
            emit(DiagnosticCode::duplicate_id, uel, "unit id declared more than once");
        if (by_id.contains(u.id))
            emit(DiagnosticCode::duplicate_id, uel, "unit id collides with a species id");

        std::set<std::string_view> regulators;
        for (const auto& t : u.terms) {
            const std::string el = uel + " / term " + t.regulator;
            if (!by_id.contains(t.regulator))
                emit(DiagnosticCode::unresolved_reference, el,
                     "regulator '" + t.regulator + "' is not a declared species");
            if (!regulators.insert(t.regulator).second)
                emit(DiagnosticCode::duplicate_term, el,
                     "regulator appears more than once on this unit");
            if (!detail::positive_finite(t.hill_constant))
                emit(DiagnosticCode::parameter_range, el, "Hill constant must be positive");
            if (!(std::isfinite(t.hill_coefficient) && t.hill_coefficient >= 1.0))
                emit(DiagnosticCode::parameter_range, el, "Hill coefficient must be >= 1");
        }

        if (u.products.empty())
            emit(DiagnosticCode::missing_products, uel, "unit produces nothing");
        std::set<std::string_view> products;
        for (const auto& p : u.products) {
            const std::string el = uel + " / product " + p.product;
            auto it = by_id.find(p.product);
            if (it == by_id.end())
                emit(DiagnosticCode::unresolved_reference, el,
                     "product '" + p.product + "' is not a declared species");
            else if (it->second->kind != SpeciesKind::state)
                emit(DiagnosticCode::produced_input, el, "clamped inputs cannot be produced");
            if (!products.insert(p.product).second)
                emit(DiagnosticCode::duplicate_id, el, "product listed twice on this unit");
            if (!detail::positive_finite(p.max_rate))
                emit(DiagnosticCode::parameter_range, el, "maximal rate must be positive");
        }
    }

    for (const auto& [id, value] : model.input_values) {
        const std::string el = "input " + id;
        auto it = by_id.find(id);
        if (it == by_id.end() || it->second->kind != SpeciesKind::clamped_input)
            emit(DiagnosticCode::not_an_input, el, "value given for something that is not an input");
        if (!(std::isfinite(value) && value >= 0.0))
            emit(DiagnosticCode::parameter_range, el, "input value must be nonnegative");
    }
    return out;
}

/// Thrown when an operation receives a model that fails validation.
class model_error : public std::invalid_argument {
public:
    explicit model_error(std::vector<Diagnostic> diags)
        : std::invalid_argument(summarize(diags)), diagnostics_(std::move(diags))
    {
    }
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string summarize(const std::vector<Diagnostic>& d)
    {
        std::string s = "invalid circuit model";
        if (!d.empty())
            s += ": " + std::string(to_string(d.front().code)) + " (" + d.front().element + ")";
        if (d.size() > 1)
            s += " and " + std::to_string(d.size() - 1) + " more";
        return s;
    }
    std::vector<Diagnostic> diagnostics_;
};

// ---------------------------------------------------------------------------
// Evaluation

using Matrix = Eigen::MatrixXd;
using State = std::vector<double>;

/// Index-resolved form of a validated model with the clamped inputs baked in.
///
/// Units are ordered by id and terms by regulator id, so the right-hand side
/// is bit-identical regardless of declaration order in the source model.
class CompiledCircuit {
public:
    explicit CompiledCircuit(const CircuitModel& model) : model_(model)
    {
        if (auto diags = validate(model_); !diags.empty())
            throw model_error(std::move(diags));

        std::map<std::string_view, std::size_t, std::less<>> state_index;
        for (const auto& s : model_.species) {
            if (s.kind != SpeciesKind::state)
                continue;
            state_index.emplace(s.id, ids_.size());
            ids_.push_back(s.id);
            degradation_.push_back(s.degradation_rate);
            initial_.push_back(s.initial_concentration);
        }
        production_bound_.assign(ids_.size(), 0.0);

        std::vector<const TranscriptionUnit*> units;
        for (const auto& u : model_.units)
            units.push_back(&u);
        std::sort(units.begin(), units.end(),
                  [](auto* a, auto* b) { return a->id < b->id; });

        for (const auto* u : units) {
            Unit cu;
            auto terms = u->terms;
            std::sort(terms.begin(), terms.end(),
                      [](const auto& a, const auto& b) { return a.regulator < b.regulator; });
            for (const auto& t : terms) {
                const bool act = t.mode == RegulationMode::activation;
                if (auto it = state_index.find(t.regulator); it != state_index.end()) {
                    cu.terms.push_back({it->second, t.hill_constant, t.hill_coefficient, act});
                } else {
                    const double x = model_.input_value(t.regulator);
                    cu.input_factor *= act ? hill_activation(x, t.hill_constant, t.hill_coefficient)
                                           : hill_repression(x, t.hill_constant, t.hill_coefficient);
                }
            }
            auto products = u->products;
            std::sort(products.begin(), products.end(),
                      [](const auto& a, const auto& b) { return a.product < b.product; });
            for (const auto& p : products) {
                const std::size_t idx = state_index.at(p.product);
                cu.products.push_back({idx, p.max_rate});
                production_bound_[idx] += p.max_rate;
            }
            units_.push_back(std::move(cu));
        }
    }

    std::size_t dimension() const noexcept { return ids_.size(); }
    const CircuitModel& model() const noexcept { return model_; }
    const std::vector<std::string>& state_ids() const noexcept { return ids_; }
    const std::vector<double>& degradation_rates() const noexcept { return degradation_; }
    const State& initial_state() const noexcept { return initial_; }

    /// Σ s over all units producing each species; bounds d x_i/dt from above.
    const std::vector<double>& production_bound() const noexcept { return production_bound_; }

    /// Upper bound on each species' steady level, Σ s / d.
    State saturation_levels() const
    {
        State out(ids_.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = production_bound_[i] / degradation_[i];
        return out;
    }

    double min_degradation() const
    {
        return *std::min_element(degradation_.begin(), degradation_.end());
    }

    std::optional<std::size_t> index_of(std::string_view id) const
    {
        for (std::size_t i = 0; i < ids_.size(); ++i)
            if (ids_[i] == id)
                return i;
        return std::nullopt;
    }

    /// dx/dt at `x`.  Regulator values below zero are read as zero.
    void rhs(std::span<const double> x, std::span<double> dx) const
    {
        const std::size_t n = ids_.size();
        for (std::size_t i = 0; i < n; ++i)
            dx[i] = -degradation_[i] * x[i];
        for (const auto& u : units_) {
            double f = u.input_factor;
            for (const auto& t : u.terms)
                f *= t.activation ? detail::activation_unchecked(x[t.index], t.k, t.h).value
                                  : detail::repression_unchecked(x[t.index], t.k, t.h).value;
            for (const auto& p : u.products)
                dx[p.index] += p.rate * f;
        }
    }

    State rhs(std::span<const double> x) const
    {
        State dx(ids_.size());
        rhs(x, dx);
        return dx;
    }

    /// Analytic Jacobian of rhs.
    Matrix jacobian(std::span<const double> x) const
    {
        const std::size_t n = ids_.size();
        Matrix jac = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            jac(idx(i), idx(i)) = -degradation_[i];

        std::vector<detail::HillValue> vals;
        for (const auto& u : units_) {
            vals.clear();
            for (const auto& t : u.terms)
                vals.push_back(t.activation ? detail::activation_unchecked(x[t.index], t.k, t.h)
                                            : detail::repression_unchecked(x[t.index], t.k, t.h));
            // ∂/∂x_j of Π_m f_m = f_j' Π_{m≠j} f_m.  Products over the other
            // factors are formed directly so zero factors are handled exactly.
            for (std::size_t j = 0; j < vals.size(); ++j) {
                double partial = u.input_factor * vals[j].slope;
                for (std::size_t m = 0; m < vals.size(); ++m)
                    if (m != j)
                        partial *= vals[m].value;
                for (const auto& p : u.products)
                    jac(idx(p.index), idx(u.terms[j].index)) += p.rate * partial;
            }
        }
        return jac;
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

    struct Term {
        std::size_t index;
        double k;
        double h;
        bool activation;
    };
    struct Product {
        std::size_t index;
        double rate;
    };
    struct Unit {
        double input_factor = 1.0;
        std::vector<Term> terms;
        std::vector<Product> products;
    };

    CircuitModel model_;
    std::vector<std::string> ids_;
    std::vector<double> degradation_;
    State initial_;
    std::vector<double> production_bound_;
    std::vector<Unit> units_;
};

namespace detail {

inline void check_state(const CompiledCircuit& c, std::span<const double> state)
{
    if (state.size() != c.dimension())
        throw std::invalid_argument("state has " + std::to_string(state.size()) +
                                    " entries, model has " + std::to_string(c.dimension()) +
                                    " state species");
    for (double v : state)
        if (!(v >= 0.0))
            throw std::domain_error("state entries must be nonnegative");
}

} // namespace detail

/// Right-hand side dx/dt of `model` at `state` (state species in declaration order).
inline State vector_field(const CircuitModel& model, std::span<const double> state)
{
    const CompiledCircuit c(model);
    detail::check_state(c, state);
    return c.rhs(state);
}

inline Matrix jacobian(const CircuitModel& model, std::span<const double> state)
{
    const CompiledCircuit c(model);
    detail::check_state(c, state);
    return c.jacobian(state);
}

} // namespace gcirc
