#include "support.hpp"

#include "gcirc/catalog.hpp"
#include "gcirc/integrator.hpp"
#include "gcirc/steady_state.hpp"

#include <catch_amalgamated.hpp>

using namespace gcirc;
using Catch::Approx;

namespace {

CircuitModel decay_only(double d)
{
    CircuitModel m;
    m.species = {{"X", d, SpeciesKind::state, 0.0}};
    return m;
}

CircuitModel constitutive(double s, double d)
{
    CircuitModel m;
    m.species = {{"X", d, SpeciesKind::state, 0.0}};
    m.units = {{"g", {}, {{"X", s}}}};
    return m;
}

} // namespace

TEST_CASE("Exponential decay")
{
    const double d = 2e-7, x0 = 3e-6, t_end = 5.0 / d;
    SolverOptions o;
    const auto tr = integrate(decay_only(d), {x0}, t_end, o);
    REQUIRE(tr.times.back() == t_end);
    const double exact = x0 * std::exp(-d * t_end);
    CHECK(std::abs(tr.states.back()[0] - exact) <= o.rel_tol * exact + o.abs_tol);
    for (std::size_t i = 1; i < tr.times.size(); ++i)
        CHECK(tr.times[i] > tr.times[i - 1]);
    CHECK(tr.states.front()[0] == x0);
}

TEST_CASE("Tolerance refinement converges")
{
    const auto m = catalog::relay_switch().with_input("TF", 1e-5);
    SolverOptions coarse, fine;
    fine.rel_tol = coarse.rel_tol / 2;
    const auto a = integrate(m, {0.0, 0.0}, 2e7, coarse).states.back();
    const auto b = integrate(m, {0.0, 0.0}, 2e7, fine).states.back();
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) <= coarse.rel_tol * std::abs(b[i]) + coarse.abs_tol);
}

TEST_CASE("Dense output agrees with stepping to the sample time")
{
    const auto m = catalog::relay_switch().with_input("TF", 1e-5);
    const std::vector<double> samples{1e5, 7.7e5, 3.1e6};
    const auto dense = integrate(m, {0.0, 0.0}, 3.1e6, {}, samples);
    REQUIRE(dense.times.size() == 4);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto direct = integrate(m, {0.0, 0.0}, samples[k]).states.back();
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(dense.states[k + 1][i] == Approx(direct[i]).epsilon(1e-6).margin(1e-11));
    }
}

TEST_CASE("Relay at TF = 0 approaches (s1/d1, ~0)")
{
    const auto tr = integrate(catalog::relay_switch(), {0.0, 0.0}, 2e8);
    CHECK(tr.states.back()[0] == Approx(50.0).epsilon(1e-6));
    CHECK(tr.states.back()[1] < 1e-9);
}

TEST_CASE("Trajectories stay nonnegative and bounded")
{
    SolverOptions o;
    for (const auto& e : catalog::entries()) {
        CAPTURE(e.name);
        auto m = catalog::build(e.name);
        for (auto id : e.inputs)
            m = m.with_input(id, 4e-6);
        const CompiledCircuit c(m);
        const auto top = c.saturation_levels();
        const auto tr = integrate(c, State(c.dimension(), 0.0), 1e8, o);
        for (const auto& row : tr.states)
            for (std::size_t i = 0; i < row.size(); ++i) {
                CHECK(row[i] >= -o.abs_tol);
                CHECK(row[i] <= top[i] + 1e-9);
            }
    }
}

TEST_CASE("Integration is bit-reproducible")
{
    const auto m = catalog::type2_closed_loop().with_input("Tin", 4e-6);
    const auto a = integrate(m, State(5, 0.0), 1e8);
    const auto b = integrate(m, State(5, 0.0), 1e8);
    CHECK(a.times == b.times);
    CHECK(a.states == b.states);
}

TEST_CASE("Integrator argument and failure handling")
{
    const auto m = catalog::relay_switch();
    CHECK_THROWS_AS(integrate(m, {0.0, 0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate(m, {0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate(m, {-1.0, 0.0}, 1.0), std::domain_error);
    const std::vector<double> bad{5.0, 2.0};
    CHECK_THROWS_AS(integrate(m, {0.0, 0.0}, 10.0, {}, bad), std::invalid_argument);

    SolverOptions tight;
    tight.max_steps = 5;
    try {
        integrate(m, {0.0, 0.0}, 1e9, tight);
        FAIL("expected integration_error");
    } catch (const integration_error& e) {
        CHECK(e.time() > 0.0);
    }
    const auto partial = integrate(CompiledCircuit(m), {0.0, 0.0}, 1e9, tight, {}, false);
    CHECK_FALSE(partial.failure.empty());
    CHECK(partial.times.size() == partial.states.size());
}

TEST_CASE("Steady state of a linear species is s/d")
{
    SolverOptions o;
    const auto eq = find_steady_state(constitutive(3e-6, 2e-7), {0.0}, o);
    CHECK(std::abs(eq.state[0] - 15.0) * 2e-7 < o.steady_tol);
    CHECK(eq.state[0] == Approx(15.0).epsilon(1e-12));
    CHECK(eq.stability == Stability::stable);
    CHECK(eq.leading_eigenvalue_real_part == Approx(-2e-7).epsilon(1e-12));
    CHECK(eq.newton_converged);
}

TEST_CASE("Steady states agree with the subtractor closed form")
{
    const catalog::SubtractorParams p;
    for (double a : gtest::linspace(0, 1e-5, 6))
        for (double b : gtest::linspace(0, 1e-5, 6)) {
            const auto m = catalog::shifted_subtractor(p).with_input("TF1", a).with_input("TF2", b);
            const auto eq = find_steady_state(m, {0.0});
            const double ref = (p.s1 * a * a / (a * a + p.k1 * p.k1) + p.s2 * p.k2 * p.k2 / (b * b + p.k2 * p.k2)) / p.d1;
            CHECK(eq.state[0] == Approx(ref).epsilon(1e-6));
            CHECK(eq.residual_norm < SolverOptions{}.steady_tol);
        }
}

TEST_CASE("Bistable comparator: biased starts reach two stable corners")
{
    const auto m = catalog::bistable_comparator().with_input("TF1", 5e-6).with_input("TF2", 5e-6);
    const auto hi1 = find_steady_state(m, {10.0, 0.0});
    const auto hi2 = find_steady_state(m, {0.0, 10.0});
    CHECK(hi1.stability == Stability::stable);
    CHECK(hi2.stability == Stability::stable);
    CHECK(hi1.state[0] > 100 * hi1.state[1]);
    CHECK(hi2.state[1] > 100 * hi2.state[0]);
    CHECK(hi1.state[0] == Approx(hi2.state[1]).epsilon(1e-9));
}

TEST_CASE("Stability classification")
{
    SECTION("pure decay")
    {
        CircuitModel m;
        m.species = {{"A", 3e-7, SpeciesKind::state, 0.0}, {"B", 1e-7, SpeciesKind::state, 0.0}};
        const auto r = classify_stability(m, std::vector<double>{0.0, 0.0});
        CHECK(r.stability == Stability::stable);
        CHECK(r.leading_real_part == Approx(-1e-7).epsilon(1e-12));
    }
    SECTION("toggle saddle is unstable")
    {
        const auto m = catalog::bistable_comparator().with_input("TF1", 5e-6).with_input("TF2", 5e-6);
        const CompiledCircuit c(m);
        // The symmetric equilibrium lies on the diagonal; polish a diagonal guess.
        auto x = detail::newton_polish(c, {2e-4, 2e-4}, {});
        REQUIRE(x);
        CHECK((*x)[0] == Approx((*x)[1]).epsilon(1e-9));
        CHECK(classify_stability(c, *x).stability == Stability::unstable);
    }
}

TEST_CASE("Slow passage past a vanished equilibrium is not reported as steady")
{
    // Just above the relay's fold the low branch no longer exists; the state
    // lingers near its ghost with a tiny residual before switching.
    const auto model = catalog::relay_switch();
    const auto low = find_steady_state(model.with_input("TF", 2.83e-5), {50.0, 0.0});
    REQUIRE(low.state[1] < 1e-6);
    for (double tf : {2.840e-5, 2.845e-5, 2.86e-5}) {
        CAPTURE(tf);
        try {
            const auto eq = find_steady_state(model.with_input("TF", tf), low.state);
            CHECK(eq.newton_converged);
            CHECK(eq.state[1] > 1.0);
        } catch (const convergence_error&) {
            SUCCEED("no steady state within the horizon");
        }
    }
}

TEST_CASE("Short horizon reports non-convergence")
{
    SolverOptions o;
    o.max_horizon = 10.0;
    CHECK_THROWS_AS(find_steady_state(catalog::relay_switch(), {0.0, 0.0}, o), convergence_error);
}

TEST_CASE("Enumeration starts")
{
    const CompiledCircuit c(catalog::type1_closed_loop().with_input("Tin", 1e-6));
    const auto s = enumeration_starts(c, 20, 5);
    REQUIRE(s.size() == 20);
    CHECK(s[0] == State(4, 0.0));
    const auto top = c.saturation_levels();
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s[1 + i][i] == top[i]);
        for (std::size_t j = 0; j < 4; ++j)
            if (j != i)
                CHECK(s[1 + i][j] == 0.0);
    }
    for (const auto& p : s)
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(p[i] >= 0.0);
            CHECK(p[i] <= top[i]);
        }
    CHECK(enumeration_starts(c, 20, 5) == s);
    CHECK(enumeration_starts(c, 20, 6) != s);
}

TEST_CASE("Equilibrium enumeration")
{
    SECTION("monostable relay")
    {
        const auto r = enumerate_equilibria(catalog::relay_switch().with_input("TF", 1e-2), 32);
        CHECK(r.failures.empty());
        CHECK(r.equilibria.size() == 1);
    }
    SECTION("bistable toggle")
    {
        const auto m = catalog::bistable_comparator().with_input("TF1", 5e-6).with_input("TF2", 5e-6);
        const auto r = enumerate_equilibria(m, 48);
        const auto stable = std::count_if(r.equilibria.begin(), r.equilibria.end(),
                                          [](const Equilibrium& e) { return e.stability == Stability::stable; });
        CHECK(stable >= 2);
        for (const auto& e : r.equilibria) {
            CHECK(e.residual_norm < SolverOptions{}.steady_tol);
            if (std::abs(e.state[0] - e.state[1]) <= 1e-6 * e.state[0])
                CHECK(e.stability == Stability::unstable);
        }
    }
    SECTION("deterministic for a seed, independent of threads")
    {
        const auto m = catalog::type1_closed_loop().with_input("Tin", 2e-6);
        SolverOptions o;
        o.seed = 17;
        const auto a = enumerate_equilibria(m, 24, o, 1);
        const auto b = enumerate_equilibria(m, 24, o, 4);
        REQUIRE(a.equilibria.size() == b.equilibria.size());
        for (std::size_t i = 0; i < a.equilibria.size(); ++i)
            CHECK(a.equilibria[i].state == b.equilibria[i].state);
    }
    SECTION("duplicate test is relative")
    {
        CHECK(same_equilibrium(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0 + 1e-7}));
        CHECK_FALSE(same_equilibrium(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0 + 1e-5}));
    }
    CHECK_THROWS_AS(enumerate_equilibria(catalog::relay_switch(), 0), std::invalid_argument);
}
