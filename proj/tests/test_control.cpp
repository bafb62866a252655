#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "qreset/control.hpp"
#include "qreset/reset.hpp"
#include "qreset/search.hpp"

using namespace qreset;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Spectrum flat(double rate) { return Spectrum(Tabulated{{{1.0, rate}, {9.0, rate}}}); }

const SpectrumModel kModels[] = {Lorentzian{}, Protected{}, Mixed{}, Jqf{}};

Trajectory restore(const ControlLaw& law, const Spectrum& s, const Environment& env,
                   const ControlBounds& b) {
  ResetProblem problem{s, env, b, law};
  return run_reset(problem).trajectory;
}
}  // namespace

TEST_SUITE("control") {
  TEST_CASE("Lorentzian optimum sits on the peak") {
    const Environment env(0.010);
    for (const double p : {0.5, 0.1, 1e-3, 2e-5}) {
      CHECK(std::abs(optimal_frequency(p, Spectrum(Lorentzian{}), env, default_bounds()) - 5.4) <
            1e-5);
    }
  }

  TEST_CASE("JQF branch choice of the global argmax") {
    const Spectrum jqf(Jqf{});
    // 10 mK: Γ(2)/Γ(8) − 1 ≈ 4.5e-5 is outweighed by p_eq(2 GHz)/p_e.
    CHECK(optimal_frequency(0.4, jqf, Environment(0.010), default_bounds()) == 8.0);
    // 5 mK: the thermal term is negligible and the lower bound wins.
    CHECK(optimal_frequency(0.4, jqf, Environment(0.005), default_bounds()) == 2.0);
    // Just above ε: p_eq(f) must stay below p_e; brute force puts the optimum at f_max.
    CHECK(optimal_frequency(1.05e-5, jqf, Environment(0.010), default_bounds()) == 8.0);
  }

  TEST_CASE("continuation follows the branch connected to f_cp") {
    const ControlBounds b = default_bounds();
    TimeLocalOptimal opt;
    opt.mode = ArgmaxMode::kContinuation;
    const OptimalController c(Spectrum(Jqf{}), Environment(0.010), b, opt);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(c.frequency_continuing(0.5, nan) == 2.0);
    CHECK(c.frequency(0.5) == 8.0);
    const OptimalController prot(Spectrum(Protected{}), Environment(0.010), b, opt);
    CHECK(std::abs(prot.frequency_continuing(0.5, nan) - 6.5) < 1.5e-3);
  }

  TEST_CASE("constant restore frequency") {
    const auto b = default_bounds();
    CHECK(std::abs(constant_restore_frequency(Spectrum(Lorentzian{}), b) - 5.4) < 1e-6);
    CHECK(constant_restore_frequency(Spectrum(Mixed{}), b) == 2.0);
    CHECK(std::abs(constant_restore_frequency(Spectrum(Protected{}), b) - 6.5) <= 1.5e-3);
  }

  TEST_CASE("no descent below the coldest equilibrium") {
    const Environment warm(0.1);
    const double p_eq_max = equilibrium_population(thermal_ratio(8.0, warm));
    CHECK_THROWS_AS(optimal_frequency(0.9 * p_eq_max, flat(1.0), warm, default_bounds()),
                    NoDescentError);
    CHECK_NOTHROW(optimal_frequency(1.1 * p_eq_max, flat(1.0), warm, default_bounds()));
  }

  TEST_CASE("property: constant Γ selects f_max") {
    const Environment warm(0.1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.03, 1.0);
    for (int i = 0; i < 50; ++i) {
      CHECK(optimal_frequency(u(rng), flat(2.0), warm, default_bounds()) == 8.0);
    }
    CHECK(optimal_frequency(1e-3, flat(2.0), Environment(0.010), default_bounds()) == 8.0);
  }

  TEST_CASE("property: argmax invariant under scaling of Γ, result within bounds") {
    const Environment env(0.008);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-4.5, 0.0);
    const ControlBounds b = default_bounds();
    for (int i = 0; i < 40; ++i) {
      const double p = std::pow(10.0, u(rng));
      const double scale = std::pow(10.0, 2.0 * u(rng) + 4.0);
      const Jqf base;
      Jqf scaled = base;
      scaled.tau0 /= scale;
      scaled.tau /= scale;
      const double f1 = optimal_frequency(p, Spectrum(base), env, b);
      const double f2 = optimal_frequency(p, Spectrum(scaled), env, b);
      CHECK(std::abs(f1 - f2) < 1e-6);
      for (const auto& m : kModels) {
        const double f = optimal_frequency(p, Spectrum(m), env, b);
        CHECK(f >= b.f_min());
        CHECK(f <= b.f_max());
      }
    }
  }

  TEST_CASE("zero-temperature reduction") {
    const Environment cold(1e-6);
    const ControlBounds b = default_bounds();
    for (const auto& m : kModels) {
      const Spectrum s(m);
      const double f_peak = constant_restore_frequency(s, b);
      const OptimalController c(s, cold, b);
      for (const double e : search::linspace(std::log10(10 * b.epsilon()), 0.0, 25)) {
        CHECK(std::abs(c.frequency(std::pow(10.0, e)) - f_peak) < 2e-6);
      }
    }
  }

  TEST_CASE("costate on a constant-rate restore matches the closed form") {
    const Environment env(0.010);
    const ControlBounds b = default_bounds();
    const double rate = 1.7;
    const auto traj = restore(TimeLocalOptimal{}, flat(rate), env, b);
    const auto costate = costate_along(traj);
    REQUIRE(costate.samples.size() == traj.samples.size());
    const auto& end = traj.back();
    const double lambda_end = 1.0 / (rate * (end.p_e - end.p_eq));
    CHECK(costate.samples.back().hamiltonian == 0.0);
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
      const double expect = lambda_end * std::exp(-rate * (traj.tau_st - traj.samples[k].t_us));
      CHECK(rel(costate.samples[k].lambda, expect) < 1e-8);
      CHECK(costate.samples[k].lambda > 0.0);
    }
  }

  TEST_CASE("costate preconditions") {
    Trajectory bad;
    bad.cause = Termination::kTimeLimit;
    bad.samples.push_back({0.0, 5.0, 0.5, 0.0, 0.0, 1.0, 0.0});
    CHECK_THROWS_AS(costate_along(bad), std::invalid_argument);
    Trajectory flat_end;
    flat_end.samples.push_back({0.0, 5.0, 0.5, 0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(costate_along(flat_end), DegenerateTransversalityError);
  }

  TEST_CASE("PMP verification") {
    const Environment env(0.010);
    const ControlBounds b = default_bounds();
    const Spectrum lz(Lorentzian{});
    SUBCASE("optimal Lorentzian restore passes") {
      const auto traj = restore(TimeLocalOptimal{}, lz, env, b);
      const auto r = verify_pmp(traj, costate_along(traj), lz, env, b);
      CHECK(r.passed());
      CHECK(r.max_abs_hamiltonian < 1e-3);
    }
    SUBCASE("constant at the peak passes on Lorentzian") {
      const auto traj = restore(ConstantAtPeak{}, lz, env, b);
      CHECK(verify_pmp(traj, costate_along(traj), lz, env, b).pointwise_minimal);
    }
    SUBCASE("pinned at f_cp fails minimality") {
      const auto traj = restore(FixedSchedule{{{0.0, b.f_cp()}}}, lz, env, b);
      const auto r = verify_pmp(traj, costate_along(traj), lz, env, b);
      CHECK_FALSE(r.pointwise_minimal);
      CHECK_FALSE(r.passed());
    }
    SUBCASE("constant at the peak fails on JQF") {
      const Environment cold(0.005);
      const Spectrum jqf(Jqf{});
      const auto traj = restore(ConstantAtPeak{}, jqf, cold, b);
      const auto r = verify_pmp(traj, costate_along(traj), jqf, cold, b);
      CHECK_FALSE(r.pointwise_minimal);
      CHECK(r.worst_gap_time_us > 0.5 * traj.tau_st);
    }
  }

  TEST_CASE("schedule validation and CSV") {
    const ControlBounds b = default_bounds();
    CHECK_THROWS_AS(validate(FixedSchedule{}, b), std::invalid_argument);
    CHECK_THROWS_AS(validate(FixedSchedule{{{0.1, 5.0}}}, b), std::invalid_argument);
    CHECK_THROWS_AS(validate(FixedSchedule{{{0.0, 5.0}, {0.0, 6.0}}}, b), std::invalid_argument);
    CHECK_THROWS_AS(validate(FixedSchedule{{{0.0, 9.0}}}, b), std::invalid_argument);
    CHECK_NOTHROW(validate(FixedSchedule{{{0.0, 5.0}, {0.2, 7.0}}}, b));

    const FixedSchedule s{{{0.0, 2.5}, {0.1 / 3.0, 5.0 + 1.0 / 7.0}, {1.0, 8.0}}};
    std::ostringstream out;
    write_schedule_csv(out, s);
    std::istringstream in(out.str());
    const FixedSchedule back = load_schedule_csv(in);
    REQUIRE(back.points.size() == 3);
    CHECK(back.points[1].t_us == s.points[1].t_us);
    CHECK(back.points[1].f_ghz == s.points[1].f_ghz);
    std::istringstream broken("t_us,f_GHz\n0,5\n0.5,x\n");
    CHECK_THROWS_AS(load_schedule_csv(broken), ParseError);
  }

  TEST_CASE("replaying the recorded schedule reproduces the restore") {
    const Environment env(0.010);
    const ControlBounds b = default_bounds();
    const Spectrum jqf(Jqf{});
    const auto traj = restore(TimeLocalOptimal{}, jqf, env, b);
    const auto sched = schedule_from_trajectory(traj);
    const auto replay = propagate_for(QubitState{}, make_policy(sched, jqf, env, b), jqf, env,
                                      traj.tau_st);
    CHECK(rel(replay.back().p_e, traj.back().p_e) < 1e-9);
  }
}
