#include <doctest.h>

#include <cmath>

#include "kecho/errors.hpp"
#include "kecho/finite_pulse.hpp"
#include "kecho/splitstep.hpp"

using namespace kecho;

namespace {

double max_diff(const LadderState& a, const LadderState& b) {
  double d = 0.0;
  for (int q = std::min(a.q_min(), b.q_min()); q <= std::max(a.q_max(), b.q_max()); ++q)
    d = std::max(d, std::abs(a.amplitude(q) - b.amplitude(q)));
  return d;
}

}  // namespace

TEST_SUITE("finite") {
  TEST_CASE("exact propagator agrees with converged Strang splitting") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(20.0, p);
    const FinitePulseSpec spec{1, V0, 2e-6, p.talbot_time, 0.0};
    const LadderState in = LadderState::ground(0.21, 30);
    const auto eig = FiberEigensystem(V0, 0.21, -30, 30, p);
    const PulsePropagator prop(eig, spec.tau_p);
    for (int sign : {1, -1}) {
      SplittingReport rep;
      const LadderState split = apply_finite_pulse(in, spec, sign, p, {}, &rep);
      CHECK(max_diff(prop.apply(in, sign), split) < 1e-8);
      CHECK(rep.substeps > 1);
    }
    CHECK(prop.bandwidth() < 30);
  }

  TEST_CASE("zero depth is free flight") {
    const PhysicalParams p = rb85_780nm();
    const LadderState in = LadderState::basis(0.3, -10, 10, 2);
    const PulsePropagator prop(FiberEigensystem(0.0, 0.3, -10, 10, p), 5e-6);
    CHECK(max_diff(prop.apply(in, 1), apply_free_evolution(in, 5e-6, p)) < 1e-13);
  }

  TEST_CASE("short pulses approach the δ kick of equal area") {
    const PhysicalParams p = rb85_780nm();
    const double phi = 0.8;
    const LadderState in = LadderState::ground(0.0, 25);
    double prev = 1.0;
    for (double tau : {1e-7, 1e-8, 1e-9}) {
      const double V0 = 2.0 * kHbar * phi / tau;
      const PulsePropagator prop(FiberEigensystem(V0, 0.0, -25, 25, p), tau);
      const double d = max_diff(prop.apply(in, 1), apply_kick(in, phi, 1));
      CHECK(d < prev);
      prev = d;
    }
    CHECK(prev < 1e-3);
  }

  TEST_CASE("sequence object matches the stepwise run") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(5.0, p);
    const FinitePulseSpec spec{6, V0, 1.5e-6, p.talbot_time + 2e-9, 0.0};
    const FiniteResult a = run_finite_askrs(spec, 0.0, p);
    const FiniteSequence seq(6, 1.5e-6, make_eigensystem(V0, 0.0, finite_half_width(6, V0, 1.5e-6), p), p);
    CHECK(seq.output(spec.T) == doctest::Approx(a.output).epsilon(1e-12));
    FiniteOptions o;
    o.method = PulseMethod::Splitting;
    CHECK(run_finite_askrs(spec, 0.0, p, o).output == doctest::Approx(a.output).epsilon(1e-7));
  }

  TEST_CASE("unitarity") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(30.0, p);
    const auto r = run_finite_askrs({8, V0, 1e-6, p.talbot_time, 0.0}, 0.17, p);
    CHECK(r.final_state.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("invalid pulse specs") {
    const PhysicalParams p = rb85_780nm();
    CHECK_THROWS_AS(validate(FinitePulseSpec{1, 1e-30, 2.0 * p.talbot_time, p.talbot_time, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(FinitePulseSpec{1, 1e-30, 1e-6, p.talbot_time, 1.0}), InvalidArgument);
  }
}

TEST_SUITE("splitstep") {
  TEST_CASE("grid oracle reproduces the ladder propagator") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(8.0, p);
    const FinitePulseSpec spec{4, V0, 1e-6, p.talbot_time + 1e-9, 0.0};
    const FiniteResult lad = run_finite_askrs(spec, -0.12, p);
    const GridResult grid = splitstep_fiber(spec, -0.12, p);
    CHECK(max_diff(lad.final_state, grid.final_state) < 1e-6);
    CHECK(std::abs(lad.return_amplitude - grid.return_amplitude) < 1e-6);
    CHECK(grid.norm_drift < 1e-10);
  }

  TEST_CASE("coarse grid is rejected") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(50.0, p);
    GridOptions o;
    o.points_per_period = 16;
    CHECK_THROWS_AS(splitstep_fiber({8, V0, 3e-6, p.talbot_time, 0.0}, 0.0, p, o), ConvergenceError);
  }

  TEST_CASE("packet on a multi-period grid matches the fiber integral") {
    const PhysicalParams p = rb85_780nm();
    const double V0 = depth_from_gamma(2.0, p);
    const FinitePulseSpec spec{3, V0, 1e-6, p.talbot_time, 0.0};
    WavepacketSpec w;
    w.sigma_x = 20.0 / p.kappa;  // a few lattice periods; σ_β = 0.025 keeps fibers independent
    w.rel_tol = 1e-9;
    const double I = splitstep_wavepacket(spec, w, p, 64);
    const auto amp = [&](double beta) { return run_finite_askrs(spec, beta, p).return_amplitude; };
    CHECK(I == doctest::Approx(integrate_fibers(amp, w, p).output).epsilon(1e-8));
    CHECK(I < 0.999);
  }
}
