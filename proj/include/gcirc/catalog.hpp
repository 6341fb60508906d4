#pragma once

#include "gcirc/hill.hpp"
#include "gcirc/model.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/// The six circuits with their default parameters,
/// and the closed-form relations that come with them.
namespace gcirc::catalog {

// Units throughout: molar, minutes.  Degradation rates are first-order (1/min).

struct RelayParams {
    double s1 = 5e-6, s2 = 1e-6;
    double k11 = 2e-7, k12 = 1e-6, k2 = 1e-6;
    double h11 = 2, h12 = 2, h2 = 2;
    double d1 = 1e-7, d2 = 5e-7;
};

struct SubtractorParams {
    double s1 = 1e-6, s2 = 1e-6;
    double k1 = 3e-6, k2 = 3e-6;
    double h1 = 2, h2 = 2;
    double d1 = 2e-7;
};

struct DiscreteComparatorParams {
    double s1 = 1e-6, s2 = 5e-6, s3 = 1e-6, s4 = 1e-6;
    double k1 = 3e-6, k4 = 3e-6, k21 = 1e-6, k22 = 1e-6, k3 = 1e-6;
    double h1 = 2, h4 = 2, h21 = 2, h22 = 2, h3 = 2;
    double d1 = 2e-7, d2 = 1e-7, d3 = 5e-7;
};

struct BistableComparatorParams {
    double s1 = 1e-6, s2 = 1e-6;
    double k11 = 1e-6, k12 = 1e-6, k21 = 1e-6, k22 = 1e-6;
    double h11 = 2, h12 = 2, h21 = 2, h22 = 2;
    double d1 = 1e-7, d2 = 1e-7;
};

/// Activator-output process under bistable-comparator control.
/// Edges: Tin -> gene1 (k11), P2 -| gene1 (k12), Pout -> gene2 (k21),
/// P1 -| gene2 (k22), P3 -> target (k4).  gene1 is polycistronic (P1, P3).
struct Type1LoopParams {
    struct Process {
        double s4 = 5e-6, k4 = 2e-6, h4 = 2, d4 = 1e-7;
        double k11 = 2e-6, h11 = 2;
        double k21 = 1e-6, h21 = 2;
        double d3 = 1e-6;
    } process;
    struct Design {
        double s1 = 3e-6, s2 = 2e-6, s3 = 3e-6;
        double k12 = 1e-6, h12 = 2;
        double k22 = 2e-6, h22 = 2;
        double d1 = 1e-6, d2 = 1e-6;
    } design;
};

/// Repressor-output process under discrete-comparator control.
/// gene1: Tin -> P1 (s1); gene4: Pout -| P1 (s5); gene2: P1 -|, P3 -| -> P2;
/// gene3: P2 -| -> P3 (s3), P4 (s4); target: P4 -> Pout (s6).
struct Type2LoopParams {
    struct Process {
        double s6 = 1e-6, k6 = 1e-6, h6 = 2, d6 = 1e-7;
        double k1 = 3e-6, h1 = 2;
        double k5 = 3e-6, h5 = 2;
        double d4 = 5e-7;
    } process;
    struct Design {
        double s1 = 1e-6, s2 = 5e-6, s3 = 1e-6, s4 = 1e-6, s5 = 1e-6;
        double k21 = 1e-6, h21 = 2;
        double k22 = 1e-6, h22 = 2;
        double k3 = 1e-6, h3 = 2;
        double d1 = 2e-7, d2 = 1e-7, d3 = 5e-7;
    } design;
};

/// Lac/IPTG inhibition of a transcription-factor input.
struct InhibitionSpec {
    double total = 0.0;       ///< total Lac, molar
    double k_inhibition = 0.0; ///< per molar squared
    double iptg = 0.0;         ///< molar
    double native_on = 0.0;    ///< uninhibited switch-on point, molar
};

// ---------------------------------------------------------------------------
// Named parameter access (used for `--param name=value` overrides).

template <class P>
struct ParamField {
    std::string_view name;
    double& (*ref)(P&);
};

#define GCIRC_FIELD(P, path, name) ParamField<P>{name, [](P& p) -> double& { return p.path; }}

inline std::span<const ParamField<RelayParams>> param_fields(const RelayParams*)
{
    using P = RelayParams;
    static const std::array<ParamField<P>, 10> f{
        GCIRC_FIELD(P, s1, "s1"),   GCIRC_FIELD(P, s2, "s2"),   GCIRC_FIELD(P, k11, "k11"),
        GCIRC_FIELD(P, k12, "k12"), GCIRC_FIELD(P, k2, "k2"),   GCIRC_FIELD(P, h11, "h11"),
        GCIRC_FIELD(P, h12, "h12"), GCIRC_FIELD(P, h2, "h2"),   GCIRC_FIELD(P, d1, "d1"),
        GCIRC_FIELD(P, d2, "d2")};
    return f;
}

inline std::span<const ParamField<SubtractorParams>> param_fields(const SubtractorParams*)
{
    using P = SubtractorParams;
    static const std::array<ParamField<P>, 7> f{
        GCIRC_FIELD(P, s1, "s1"), GCIRC_FIELD(P, s2, "s2"), GCIRC_FIELD(P, k1, "k1"),
        GCIRC_FIELD(P, k2, "k2"), GCIRC_FIELD(P, h1, "h1"), GCIRC_FIELD(P, h2, "h2"),
        GCIRC_FIELD(P, d1, "d1")};
    return f;
}

inline std::span<const ParamField<DiscreteComparatorParams>> param_fields(const DiscreteComparatorParams*)
{
    using P = DiscreteComparatorParams;
    static const std::array<ParamField<P>, 17> f{
        GCIRC_FIELD(P, s1, "s1"),   GCIRC_FIELD(P, s2, "s2"),   GCIRC_FIELD(P, s3, "s3"),
        GCIRC_FIELD(P, s4, "s4"),   GCIRC_FIELD(P, k1, "k1"),   GCIRC_FIELD(P, k4, "k4"),
        GCIRC_FIELD(P, k21, "k21"), GCIRC_FIELD(P, k22, "k22"), GCIRC_FIELD(P, k3, "k3"),
        GCIRC_FIELD(P, h1, "h1"),   GCIRC_FIELD(P, h4, "h4"),   GCIRC_FIELD(P, h21, "h21"),
        GCIRC_FIELD(P, h22, "h22"), GCIRC_FIELD(P, h3, "h3"),   GCIRC_FIELD(P, d1, "d1"),
        GCIRC_FIELD(P, d2, "d2"),   GCIRC_FIELD(P, d3, "d3")};
    return f;
}

inline std::span<const ParamField<BistableComparatorParams>> param_fields(const BistableComparatorParams*)
{
    using P = BistableComparatorParams;
    static const std::array<ParamField<P>, 12> f{
        GCIRC_FIELD(P, s1, "s1"),   GCIRC_FIELD(P, s2, "s2"),   GCIRC_FIELD(P, k11, "k11"),
        GCIRC_FIELD(P, k12, "k12"), GCIRC_FIELD(P, k21, "k21"), GCIRC_FIELD(P, k22, "k22"),
        GCIRC_FIELD(P, h11, "h11"), GCIRC_FIELD(P, h12, "h12"), GCIRC_FIELD(P, h21, "h21"),
        GCIRC_FIELD(P, h22, "h22"), GCIRC_FIELD(P, d1, "d1"),   GCIRC_FIELD(P, d2, "d2")};
    return f;
}

inline std::span<const ParamField<Type1LoopParams>> param_fields(const Type1LoopParams*)
{
    using P = Type1LoopParams;
    static const std::array<ParamField<P>, 18> f{
        GCIRC_FIELD(P, process.s4, "s4"),   GCIRC_FIELD(P, process.k4, "k4"),
        GCIRC_FIELD(P, process.h4, "h4"),   GCIRC_FIELD(P, process.d4, "d4"),
        GCIRC_FIELD(P, process.k11, "k11"), GCIRC_FIELD(P, process.h11, "h11"),
        GCIRC_FIELD(P, process.k21, "k21"), GCIRC_FIELD(P, process.h21, "h21"),
        GCIRC_FIELD(P, process.d3, "d3"),   GCIRC_FIELD(P, design.s1, "s1"),
        GCIRC_FIELD(P, design.s2, "s2"),    GCIRC_FIELD(P, design.s3, "s3"),
        GCIRC_FIELD(P, design.k12, "k12"),  GCIRC_FIELD(P, design.h12, "h12"),
        GCIRC_FIELD(P, design.k22, "k22"),  GCIRC_FIELD(P, design.h22, "h22"),
        GCIRC_FIELD(P, design.d1, "d1"),    GCIRC_FIELD(P, design.d2, "d2")};
    return f;
}

inline std::span<const ParamField<Type2LoopParams>> param_fields(const Type2LoopParams*)
{
    using P = Type2LoopParams;
    static const std::array<ParamField<P>, 23> f{
        GCIRC_FIELD(P, process.s6, "s6"),  GCIRC_FIELD(P, process.k6, "k6"),
        GCIRC_FIELD(P, process.h6, "h6"),  GCIRC_FIELD(P, process.d6, "d6"),
        GCIRC_FIELD(P, process.k1, "k1"),  GCIRC_FIELD(P, process.h1, "h1"),
        GCIRC_FIELD(P, process.k5, "k5"),  GCIRC_FIELD(P, process.h5, "h5"),
        GCIRC_FIELD(P, process.d4, "d4"),  GCIRC_FIELD(P, design.s1, "s1"),
        GCIRC_FIELD(P, design.s2, "s2"),   GCIRC_FIELD(P, design.s3, "s3"),
        GCIRC_FIELD(P, design.s4, "s4"),   GCIRC_FIELD(P, design.s5, "s5"),
        GCIRC_FIELD(P, design.k21, "k21"), GCIRC_FIELD(P, design.h21, "h21"),
        GCIRC_FIELD(P, design.k22, "k22"), GCIRC_FIELD(P, design.h22, "h22"),
        GCIRC_FIELD(P, design.k3, "k3"),   GCIRC_FIELD(P, design.h3, "h3"),
        GCIRC_FIELD(P, design.d1, "d1"),   GCIRC_FIELD(P, design.d2, "d2"),
        GCIRC_FIELD(P, design.d3, "d3")};
    return f;
}

#undef GCIRC_FIELD

/// Sets the parameter called `name`; throws std::invalid_argument if unknown.
template <class P>
void set_param(P& params, std::string_view name, double value)
{
    for (const auto& f : param_fields(static_cast<const P*>(nullptr)))
        if (f.name == name) {
            f.ref(params) = value;
            return;
        }
    throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

template <class P>
std::map<std::string, double> param_values(P params)
{
    std::map<std::string, double> out;
    for (const auto& f : param_fields(static_cast<const P*>(nullptr)))
        out.emplace(f.name, f.ref(params));
    return out;
}

// ---------------------------------------------------------------------------
// Circuit constructors

namespace detail {

inline Species state(std::string id, double d) { return {std::move(id), d, SpeciesKind::state, 0.0}; }
inline Species input(std::string id) { return {std::move(id), 0.0, SpeciesKind::clamped_input, 0.0}; }
inline RegulationTerm act(std::string reg, double k, double h)
{
    return {std::move(reg), RegulationMode::activation, k, h};
}
inline RegulationTerm rep(std::string reg, double k, double h)
{
    return {std::move(reg), RegulationMode::repression, k, h};
}

inline CircuitModel checked(CircuitModel m)
{
    if (auto diags = validate(m); !diags.empty())
        throw model_error(std::move(diags));
    return m;
}

} // namespace detail

/// TF -| gene1 -> P1, P2 -| gene1; P1 -| gene2 -> P2.  Output P2.
inline CircuitModel relay_switch(const RelayParams& p = {})
{
    using namespace detail;
    CircuitModel m;
    m.species = {state("P1", p.d1), state("P2", p.d2), input("TF")};
    m.units = {
        {"gene1", {rep("P2", p.k12, p.h12), rep("TF", p.k11, p.h11)}, {{"P1", p.s1}}},
        {"gene2", {rep("P1", p.k2, p.h2)}, {{"P2", p.s2}}},
    };
    m.input_values = {{"TF", 0.0}};
    return checked(std::move(m));
}

/// Relay whose TF input is total Lac, partially sequestered by IPTG.  With the
/// effective input T/(1 + kI I^2), the TF repression term is exactly a Hill
/// term in total Lac with constant k11 (1 + kI I^2).
inline CircuitModel relay_switch_inhibited(const RelayParams& p, double k_inhibition, double iptg)
{
    if (!(k_inhibition > 0.0) || !(iptg >= 0.0))
        throw std::domain_error("relay_switch_inhibited: need k_I > 0 and I >= 0");
    RelayParams scaled = p;
    scaled.k11 = p.k11 * (1.0 + k_inhibition * iptg * iptg);
    return relay_switch(scaled);
}

/// gene1: TF1 -> P1 (s1); gene2: TF2 -| P1 (s2).
inline CircuitModel shifted_subtractor(const SubtractorParams& p = {})
{
    using namespace detail;
    CircuitModel m;
    m.species = {state("P1", p.d1), input("TF1"), input("TF2")};
    m.units = {
        {"gene1", {act("TF1", p.k1, p.h1)}, {{"P1", p.s1}}},
        {"gene2", {rep("TF2", p.k2, p.h2)}, {{"P1", p.s2}}},
    };
    m.input_values = {{"TF1", 0.0}, {"TF2", 0.0}};
    return checked(std::move(m));
}

/// Subtractor stage (P1) in series with a relay stage (P2, P3).  Output P3.
inline CircuitModel discrete_comparator(const DiscreteComparatorParams& p = {})
{
    using namespace detail;
    CircuitModel m;
    m.species = {state("P1", p.d1), state("P2", p.d2), state("P3", p.d3), input("TF1"),
                 input("TF2")};
    m.units = {
        {"gene1", {act("TF1", p.k1, p.h1)}, {{"P1", p.s1}}},
        {"gene2", {rep("P1", p.k21, p.h21), rep("P3", p.k22, p.h22)}, {{"P2", p.s2}}},
        {"gene3", {rep("P2", p.k3, p.h3)}, {{"P3", p.s3}}},
        {"gene4", {rep("TF2", p.k4, p.h4)}, {{"P1", p.s4}}},
    };
    m.input_values = {{"TF1", 0.0}, {"TF2", 0.0}};
    return checked(std::move(m));
}

/// Mutual-repression toggle, each side activated by its own input.  Output P1.
inline CircuitModel bistable_comparator(const BistableComparatorParams& p = {})
{
    using namespace detail;
    CircuitModel m;
    m.species = {state("P1", p.d1), state("P2", p.d2), input("TF1"), input("TF2")};
    m.units = {
        {"gene1", {rep("P2", p.k12, p.h12), act("TF1", p.k11, p.h11)}, {{"P1", p.s1}}},
        {"gene2", {rep("P1", p.k22, p.h22), act("TF2", p.k21, p.h21)}, {{"P2", p.s2}}},
    };
    m.input_values = {{"TF1", 0.0}, {"TF2", 0.0}};
    return checked(std::move(m));
}

inline CircuitModel type1_closed_loop(const Type1LoopParams& p = {})
{
    using namespace detail;
    const auto& pr = p.process;
    const auto& de = p.design;
    CircuitModel m;
    m.species = {state("P1", de.d1), state("P2", de.d2), state("P3", pr.d3),
                 state("Pout", pr.d4), input("Tin")};
    m.units = {
        {"gene1", {rep("P2", de.k12, de.h12), act("Tin", pr.k11, pr.h11)},
         {{"P1", de.s1}, {"P3", de.s3}}},
        {"gene2", {rep("P1", de.k22, de.h22), act("Pout", pr.k21, pr.h21)}, {{"P2", de.s2}}},
        {"target", {act("P3", pr.k4, pr.h4)}, {{"Pout", pr.s4}}},
    };
    m.input_values = {{"Tin", 0.0}};
    return checked(std::move(m));
}

inline CircuitModel type2_closed_loop(const Type2LoopParams& p = {})
{
    using namespace detail;
    const auto& pr = p.process;
    const auto& de = p.design;
    CircuitModel m;
    m.species = {state("P1", de.d1), state("P2", de.d2), state("P3", de.d3),
                 state("P4", pr.d4), state("Pout", pr.d6), input("Tin")};
    m.units = {
        {"gene1", {act("Tin", pr.k1, pr.h1)}, {{"P1", de.s1}}},
        {"gene2", {rep("P1", de.k21, de.h21), rep("P3", de.k22, de.h22)}, {{"P2", de.s2}}},
        {"gene3", {rep("P2", de.k3, de.h3)}, {{"P3", de.s3}, {"P4", de.s4}}},
        {"gene4", {rep("Pout", pr.k5, pr.h5)}, {{"P1", de.s5}}},
        {"target", {act("P4", pr.k6, pr.h6)}, {{"Pout", pr.s6}}},
    };
    m.input_values = {{"Tin", 0.0}};
    return checked(std::move(m));
}

// ---------------------------------------------------------------------------
// Name registry

struct CatalogEntry {
    std::string_view name;
    std::string_view output;             ///< observable species
    std::vector<std::string_view> inputs; ///< clamped inputs, in figure-axis order
};

inline const std::vector<CatalogEntry>& entries()
{
    static const std::vector<CatalogEntry> e{
        {"relay", "P2", {"TF"}},
        {"subtractor", "P1", {"TF1", "TF2"}},
        {"discrete-comparator", "P3", {"TF1", "TF2"}},
        {"bistable-comparator", "P1", {"TF1", "TF2"}},
        {"type1-loop", "Pout", {"Tin"}},
        {"type2-loop", "Pout", {"Tin"}},
    };
    return e;
}

inline const CatalogEntry& entry(std::string_view name)
{
    for (const auto& e : entries())
        if (e.name == name)
            return e;
    throw std::invalid_argument("unknown catalog circuit '" + std::string(name) + "'");
}

namespace detail {

template <class P>
P with_overrides(const std::map<std::string, double, std::less<>>& overrides)
{
    P p;
    for (const auto& [name, value] : overrides)
        set_param(p, name, value);
    return p;
}

} // namespace detail

/// Builds a catalog circuit by name with optional parameter overrides.
inline CircuitModel build(std::string_view name,
                          const std::map<std::string, double, std::less<>>& overrides = {})
{
    using detail::with_overrides;
    if (name == "relay") return relay_switch(with_overrides<RelayParams>(overrides));
    if (name == "subtractor") return shifted_subtractor(with_overrides<SubtractorParams>(overrides));
    if (name == "discrete-comparator")
        return discrete_comparator(with_overrides<DiscreteComparatorParams>(overrides));
    if (name == "bistable-comparator")
        return bistable_comparator(with_overrides<BistableComparatorParams>(overrides));
    if (name == "type1-loop") return type1_closed_loop(with_overrides<Type1LoopParams>(overrides));
    if (name == "type2-loop") return type2_closed_loop(with_overrides<Type2LoopParams>(overrides));
    throw std::invalid_argument("unknown catalog circuit '" + std::string(name) + "'");
}

/// Parameter values of a catalog circuit after applying `overrides`.
inline std::map<std::string, double> parameters(std::string_view name,
                                                const std::map<std::string, double, std::less<>>& overrides = {})
{
    using detail::with_overrides;
    if (name == "relay") return param_values(with_overrides<RelayParams>(overrides));
    if (name == "subtractor") return param_values(with_overrides<SubtractorParams>(overrides));
    if (name == "discrete-comparator") return param_values(with_overrides<DiscreteComparatorParams>(overrides));
    if (name == "bistable-comparator") return param_values(with_overrides<BistableComparatorParams>(overrides));
    if (name == "type1-loop") return param_values(with_overrides<Type1LoopParams>(overrides));
    if (name == "type2-loop") return param_values(with_overrides<Type2LoopParams>(overrides));
    throw std::invalid_argument("unknown catalog circuit '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Closed forms

/// Steady P1 of the subtractor: (s1 act(TF1) + s2 rep(TF2)) / d1.
inline double subtractor_steady_state(double tf1, double tf2, const SubtractorParams& p = {})
{
    return (p.s1 * hill_activation(tf1, p.k1, p.h1) + p.s2 * hill_repression(tf2, p.k2, p.h2)) /
           p.d1;
}

inline bool is_symmetric(const SubtractorParams& p)
{
    return p.s1 == p.s2 && p.k1 == p.k2 && p.h1 == p.h2;
}

/// Steady P1 for symmetric parameters in the combined rational form
///   (s/d1) (1 + ((k TF1)^h - (k TF2)^h) / ((TF1 TF2)^h + (k TF1)^h + (k TF2)^h + k^2h)).
/// Evaluated in units of k to stay clear of underflow.
inline double subtractor_steady_state_symmetric(double tf1, double tf2, const SubtractorParams& p = {})
{
    if (!is_symmetric(p))
        throw std::invalid_argument("subtractor_steady_state_symmetric: parameters not symmetric");
    if (!(tf1 >= 0.0) || !(tf2 >= 0.0))
        throw std::domain_error("subtractor_steady_state_symmetric: negative input");
    const double h = p.h1;
    const double a = std::pow(tf1 / p.k1, h);
    const double b = std::pow(tf2 / p.k1, h);
    return (p.s1 / p.d1) * (1.0 + (a - b) / (a * b + a + b + 1.0));
}

struct AlphaBeta {
    double alpha;
    double beta;
};

/// Baseline alpha = s/d1 and excursion beta = (s/d1) TFmax^h / (TFmax^h + k^h).
/// The subtractor then spans [alpha - beta, alpha + beta] over [0, TFmax]^2.
inline AlphaBeta subtractor_alpha_beta(const SubtractorParams& p, double tf_max)
{
    if (!is_symmetric(p))
        throw std::invalid_argument("subtractor_alpha_beta: parameters not symmetric");
    const double alpha = p.s1 / p.d1;
    return {alpha, alpha * hill_activation(tf_max, p.k1, p.h1)};
}

/// Effective (uninhibited) transcription factor: T_tot / (1 + kI I^2).
inline double iptg_effective_tf(const InhibitionSpec& spec)
{
    if (!(spec.k_inhibition > 0.0) || !(spec.iptg >= 0.0) || !(spec.total >= 0.0))
        throw std::domain_error("iptg_effective_tf: need k_I > 0, I >= 0, T_tot >= 0");
    return spec.total / (1.0 + spec.k_inhibition * spec.iptg * spec.iptg);
}

/// IPTG concentration that moves the switch-on point from `native_on` to
/// `switch_point`: sqrt((Sp / native_on - 1) / kI).
inline double iptg_for_switch_point(double switch_point, double k_inhibition, double native_on)
{
    if (!(native_on > 0.0) || !(k_inhibition > 0.0))
        throw std::domain_error("iptg_for_switch_point: need native_on > 0 and k_I > 0");
    if (!(switch_point >= native_on))
        throw std::domain_error("iptg_for_switch_point: inhibition can only raise the switch point");
    return std::sqrt((switch_point / native_on - 1.0) / k_inhibition);
}

} // namespace gcirc::catalog
