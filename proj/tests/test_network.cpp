#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "helpers.hpp"
#include "tubegrid/network.hpp"

using namespace tubegrid;

TEST_CASE("incidence matrix encodes oriented edges") {
  const Eigen::MatrixXd b = build_incidence({{0, 1}, {1, 2}}, 3);
  REQUIRE(b.rows() == 2);
  REQUIRE(b.cols() == 3);
  CHECK(b(0, 0) == -1.0);
  CHECK(b(0, 1) == 1.0);
  CHECK(b(0, 2) == 0.0);
  CHECK(b(1, 1) == -1.0);
  CHECK(b(1, 2) == 1.0);
  // Every row sums to zero: one tail, one head.
  CHECK(b.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("incidence rejects bad edge endpoints") {
  CHECK_THROWS_AS(build_incidence({{0, 3}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_incidence({{-1, 0}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_incidence({{1, 1}}, 3), std::invalid_argument);
}

TEST_CASE("laplacian weight and spectrum of the benchmark mesh") {
  const Network net = make_network(fixtures::mesh6_model());
  const double omega_l = net.model.grid_frequency * 0.06;
  CHECK(omega_l == doctest::Approx(18.84955592153876).epsilon(1e-14));
  const double w = 1.0 / (omega_l - 0.1);
  CHECK(w == doctest::Approx(0.053334596519762856).epsilon(1e-14));

  // Ring plus three chords is a circulant graph: one zero mode, a
  // four-fold eigenvalue 3w and a top eigenvalue 6w.
  CHECK(net.laplacian(0, 0) == doctest::Approx(3.0 * w).epsilon(1e-13));
  CHECK(net.laplacian(0, 1) == doctest::Approx(-w).epsilon(1e-13));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(net.laplacian);
  const Eigen::VectorXd ev = es.eigenvalues();
  CHECK(std::abs(ev(0)) < 1e-12);
  for (int k = 1; k <= 4; ++k)
    CHECK(ev(k) == doctest::Approx(3.0 * w).epsilon(1e-12));
  CHECK(ev(5) == doctest::Approx(6.0 * w).epsilon(1e-12));
}

TEST_CASE("laplacian requires inductance-dominated lines") {
  const Eigen::MatrixXd b = build_incidence({{0, 1}}, 2);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 0.1);
  const Eigen::VectorXd l_bad = Eigen::VectorXd::Constant(1, 1e-5);
  CHECK_THROWS_AS(build_laplacian(b, r, l_bad, 2.0 * kPi * 50.0),
                  std::invalid_argument);
}

TEST_CASE("validate_network accepts the benchmark and flags damage") {
  NetworkModel good = fixtures::mesh6_model();
  CHECK(validate_network(good).empty());

  NetworkModel short_cap = good;
  short_cap.capacitance = Eigen::VectorXd::Constant(5, 500e-6);
  CHECK_FALSE(validate_network(short_cap).empty());

  NetworkModel negative_cap = good;
  negative_cap.capacitance(2) = -1.0;
  CHECK_FALSE(validate_network(negative_cap).empty());

  NetworkModel disconnected;
  disconnected.nodes = 3;
  disconnected.edges = {{0, 1}};
  disconnected.capacitance = Eigen::VectorXd::Constant(3, 500e-6);
  disconnected.line_resistance = Eigen::VectorXd::Constant(1, 0.1);
  disconnected.line_inductance = Eigen::VectorXd::Constant(1, 0.06);
  disconnected.rated_voltage = Eigen::VectorXd::Constant(3, 110.0);
  disconnected.load_p = Eigen::VectorXd::Zero(3);
  disconnected.load_q = Eigen::VectorXd::Zero(3);
  disconnected.dp_max = Eigen::VectorXd::Zero(3);
  disconnected.dq_max = Eigen::VectorXd::Zero(3);
  disconnected.v_center = Eigen::VectorXd::Constant(3, 110.0);
  disconnected.v_max = Eigen::VectorXd::Constant(3, 6.0);
  CHECK_FALSE(validate_network(disconnected).empty());

  CHECK_THROWS_AS(make_network(disconnected), std::invalid_argument);
}

TEST_CASE("single node with no lines is a valid degenerate network") {
  const Network net = make_network(fixtures::single_node_model());
  CHECK(net.n() == 1);
  CHECK(net.m() == 0);
  CHECK(net.laplacian.rows() == 1);
  CHECK(net.laplacian(0, 0) == 0.0);
}

TEST_CASE("node_sets reflects the configured geometry") {
  const NodeSets sets =
      node_sets(fixtures::mesh6_model(), fixtures::mesh6_gains());
  CHECK(sets.v_center_d(0) == 109.5);
  CHECK(sets.v_radius(0) == 6.0);
  CHECK(sets.e_radius(0) == doctest::Approx(std::sqrt(0.2)).epsilon(1e-15));
  CHECK(sets.z_lo(0) == doctest::Approx(-6.0));
  CHECK(sets.z_hi(0) == doctest::Approx(5.0));
}

TEST_CASE("gain validation enforces sizes, positivity and the M identity") {
  GainSet g = fixtures::mesh6_gains();
  CHECK_NOTHROW(validate_gains(g, 6));

  GainSet wrong_size = g;
  wrong_size.K = Eigen::VectorXd::Constant(5, 40.0);
  CHECK_THROWS_AS(validate_gains(wrong_size, 6), std::invalid_argument);

  GainSet negative = g;
  negative.K_d(3) = 0.0;
  CHECK_THROWS_AS(validate_gains(negative, 6), std::invalid_argument);

  // M must equal z_tilde_m * K_d so the integrator ceiling lands exactly
  // on the excursion bound.
  GainSet inconsistent = g;
  inconsistent.M(0) = 499.0;
  CHECK_THROWS_AS(validate_gains(inconsistent, 6), std::invalid_argument);
}

TEST_CASE("reference schedule lookup picks the active epoch") {
  const ReferenceSchedule refs = fixtures::mesh6_refs();
  CHECK_NOTHROW(refs.validate(6));
  CHECK(refs.at(0.0)(0) == -3.5);
  CHECK(refs.at(0.1999)(0) == -3.5);
  CHECK(refs.at(0.2)(0) == -5.0);
  CHECK(refs.at(0.3)(5) == 2.5);
  CHECK(refs.at(0.4)(5) == 6.0);
  CHECK(refs.at(10.0)(5) == 6.0);
}

TEST_CASE("reference schedule validation rejects malformed input") {
  ReferenceSchedule bad_start;
  bad_start.times = {0.1};
  bad_start.values = {Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(bad_start.validate(2), std::invalid_argument);

  ReferenceSchedule not_increasing;
  not_increasing.times = {0.0, 0.5, 0.5};
  not_increasing.values = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2),
                           Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(not_increasing.validate(2), std::invalid_argument);

  ReferenceSchedule wrong_width;
  wrong_width.times = {0.0};
  wrong_width.values = {Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(wrong_width.validate(2), std::invalid_argument);
}
