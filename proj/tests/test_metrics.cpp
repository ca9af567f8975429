#include <doctest.h>

#include "tomosbl/metrics.hpp"
#include "tomosbl/sim.hpp"

using namespace tomosbl;

TEST_CASE("degree conversion") {
  CHECK(rad_to_deg(std::numbers::pi) == doctest::Approx(180.0).epsilon(1e-14));
  CHECK(deg_to_rad(90.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-14));
  CHECK(rad_to_deg(deg_to_rad(37.25)) == doctest::Approx(37.25).epsilon(1e-14));
}

TEST_CASE("angular bias") {
  Eigen::VectorXcd a(3), b(3);
  a << Complex{1.0, 0.0}, Complex{0.0, 1.0}, Complex{1.0, 1.0};

  SUBCASE("zero for identical vectors") {
    CHECK(angular_bias(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("pi/2 for orthogonal vectors") {
    b << Complex{0.0, 1.0}, Complex{1.0, 0.0}, Complex{0.0, 0.0};
    // a^H b = -j*0 ... compute: conj(1)*j + conj(j)*1 + 0 = j - j = 0
    CHECK(angular_bias(a, b) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));
  }
  SUBCASE("invariant to scale and global phase of both arguments") {
    b << Complex{0.5, 0.5}, Complex{-1.0, 2.0}, Complex{0.3, -0.7};
    const double ref = angular_bias(a, b);
    CHECK(angular_bias(Eigen::VectorXcd(3.7 * a), b) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(angular_bias(a, Eigen::VectorXcd(std::polar(2.0, 1.1) * b)) ==
          doctest::Approx(ref).epsilon(1e-12));
  }
  SUBCASE("symmetric") {
    b << Complex{0.5, 0.5}, Complex{-1.0, 2.0}, Complex{0.3, -0.7};
    CHECK(angular_bias(a, b) == doctest::Approx(angular_bias(b, a)).epsilon(1e-12));
  }
  SUBCASE("45 degree arithmetic") {
    Eigen::VectorXcd u(2), v(2);
    u << Complex{1.0, 0.0}, Complex{0.0, 0.0};
    v << Complex{1.0, 0.0}, Complex{1.0, 0.0};
    CHECK(rad_to_deg(angular_bias(u, v)) == doctest::Approx(45.0).epsilon(1e-12));
  }
  SUBCASE("argument checks") {
    CHECK_THROWS(angular_bias(a, Eigen::VectorXcd::Ones(2)));
    CHECK_THROWS(angular_bias(a, Eigen::VectorXcd::Zero(3)));
  }
}

TEST_CASE("elevation crlb") {
  SuperresPreset preset;
  const AcquisitionGeometry geom = preset.geometry();

  SUBCASE("closed-form arithmetic") {
    const double snr = 4.0;  // 6 dB approx; use exact 4.0 for arithmetic
    const double sigma_b = geom.baseline_std();
    const double expected = geom.wavelength * geom.slant_range /
                            (4.0 * std::numbers::pi * sigma_b * std::sqrt(2.0 * 25.0 * snr));
    CHECK(crlb_elevation(geom, snr) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("scales as 1/sqrt(snr)") {
    CHECK(crlb_elevation(geom, 4.0) ==
          doctest::Approx(crlb_elevation(geom, 16.0) * 2.0).epsilon(1e-12));
  }

  SUBCASE("matches the numerical Fisher-information oracle") {
    // single scatterer g = a e^{j phi} r(s) + CN(0, sigma2 I); unknowns
    // (s, a, phi). Build the 3x3 Fisher matrix with numerical dmu/ds and
    // invert it; the (s, s) entry of the inverse is the position CRLB.
    const double a = 1.3, phi = 0.45, s = 137.0, sigma2 = 0.37;
    const int n = geom.num_acquisitions();
    const Complex c = a * std::polar(1.0, phi);

    const double h = 1e-4;
    const Eigen::VectorXcd d_s =
        c * (steering_vector(geom, s + h) - steering_vector(geom, s - h)) / (2.0 * h);
    const Eigen::VectorXcd r = steering_vector(geom, s);
    const Eigen::VectorXcd d_a = std::polar(1.0, phi) * r;
    const Eigen::VectorXcd d_phi = Complex{0.0, 1.0} * c * r;

    Eigen::Matrix3d fim;
    const std::array<const Eigen::VectorXcd*, 3> d{&d_s, &d_a, &d_phi};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        fim(i, j) = (2.0 / sigma2) * std::real(d[i]->dot(*d[j]));
    const double oracle = std::sqrt(fim.inverse()(0, 0));

    const double closed = crlb_elevation(geom, a * a / sigma2);
    CHECK(std::abs(closed - oracle) / oracle < 1e-6);
    (void)n;
  }

  SUBCASE("argument checks") {
    CHECK_THROWS(crlb_elevation(geom, 0.0));
    AcquisitionGeometry flat = geom;
    flat.baselines.assign(5, 0.0);
    CHECK_THROWS(crlb_elevation(flat, 1.0));
  }
}

TEST_CASE("detection classification") {
  Scene truth;
  truth.scatterers.push_back({100.0, 1.0, 0.0});
  truth.scatterers.push_back({130.0, 1.0, 0.0});
  const double crlb = 2.5;

  auto result_at = [](std::initializer_list<double> elevs) {
    SblResult r;
    for (double e : elevs) r.scatterers.push_back({e, Complex{1.0, 0.0}});
    return r;
  };

  SUBCASE("both inside 4 crlb succeeds") {
    CHECK(classify_detection(truth, result_at({101.0, 129.0}), crlb));
  }
  SUBCASE("boundary: 3.9 crlb passes, 4.1 crlb fails") {
    CHECK(classify_detection(truth, result_at({100.0 + 3.9 * crlb, 130.0}), crlb));
    CHECK_FALSE(classify_detection(truth, result_at({100.0 + 4.1 * crlb, 130.0}), crlb));
  }
  SUBCASE("wrong count fails") {
    CHECK_FALSE(classify_detection(truth, result_at({100.0}), crlb));
    CHECK_FALSE(classify_detection(truth, result_at({99.0, 101.0, 130.0}), crlb));
    CHECK_FALSE(classify_detection(truth, result_at({}), crlb));
  }
  SUBCASE("pairing follows elevation order regardless of input order") {
    CHECK(classify_detection(truth, result_at({129.0, 101.0}), crlb));
  }
  SUBCASE("truth must have two scatterers") {
    Scene one;
    one.scatterers.push_back({100.0, 1.0, 0.0});
    CHECK_THROWS(classify_detection(one, result_at({100.0, 130.0}), crlb));
  }
}

TEST_CASE("aggregate statistics") {
  SUBCASE("hand-computed example") {
    std::vector<MetricsRecord> recs(4);
    const double degs[4] = {0.5, 2.0, 5.0, 10.0};
    for (int i = 0; i < 4; ++i) {
      recs[i].sample_index = static_cast<std::uint64_t>(i);
      ScattererSlot slot;
      slot.true_elevation = 100.0;
      slot.bias_rad = deg_to_rad(degs[i]);
      recs[i].slots.push_back(slot);
      recs[i].detection_success = i < 3;
    }
    const auto stats = aggregate(recs);
    REQUIRE(stats.slots.size() == 1);
    const auto& s = stats.slots[0];
    CHECK(s.count == 4);
    CHECK(s.mean_deg == doctest::Approx(4.375).epsilon(1e-9));
    CHECK(s.pct_le1 == doctest::Approx(25.0));
    CHECK(s.pct_le3 == doctest::Approx(50.0));
    CHECK(s.pct_le6 == doctest::Approx(75.0));
    CHECK(s.pct_gt6 == doctest::Approx(25.0));
    CHECK(s.pct_le6 + s.pct_gt6 == doctest::Approx(100.0));
    // population std of {0.5, 2, 5, 10}
    double var = 0.0;
    for (double d : degs) var += (d - 4.375) * (d - 4.375);
    CHECK(s.std_deg == doctest::Approx(std::sqrt(var / 4.0)).epsilon(1e-9));
    REQUIRE(stats.detection_rate.has_value());
    CHECK(*stats.detection_rate == doctest::Approx(0.75));
  }

  SUBCASE("absent slots are excluded from the count") {
    std::vector<MetricsRecord> recs(2);
    ScattererSlot present;
    present.bias_rad = deg_to_rad(2.0);
    recs[0].slots = {present, ScattererSlot{}};
    recs[1].slots = {present, present};
    const auto stats = aggregate(recs);
    REQUIRE(stats.slots.size() == 2);
    CHECK(stats.slots[0].count == 2);
    CHECK(stats.slots[1].count == 1);
    CHECK_FALSE(stats.detection_rate.has_value());
  }

  SUBCASE("empty input throws") {
    CHECK_THROWS(aggregate({}));
  }
}

TEST_CASE("steering estimate matching") {
  AngularBiasPreset preset;
  const AcquisitionGeometry geom = preset.geometry();
  const Eigen::VectorXcd r1 = steering_vector(geom, 80.0);
  const Eigen::VectorXcd r2 = steering_vector(geom, 220.0);
  const std::vector<Eigen::VectorXcd> truths{r1, r2};
  const std::vector<double> elevs{80.0, 220.0};

  SUBCASE("direct order when estimates match their own slots") {
    const auto slots = match_steering_estimates({r1, r2}, truths, elevs, {80.0, 220.0});
    REQUIRE(slots.size() == 2);
    CHECK(*slots[0].bias_rad == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(*slots[1].bias_rad == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(*slots[0].est_elevation == 80.0);
    CHECK(*slots[1].est_elevation == 220.0);
  }

  SUBCASE("swapped estimates are reassigned") {
    const auto slots = match_steering_estimates({r2, r1}, truths, elevs, {220.0, 80.0});
    CHECK(*slots[0].bias_rad == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(*slots[0].est_elevation == 80.0);
    CHECK(*slots[1].est_elevation == 220.0);
  }

  SUBCASE("single estimate fills only its best slot") {
    const auto slots = match_steering_estimates({r2}, truths, elevs, {220.0});
    CHECK_FALSE(slots[0].bias_rad.has_value());
    REQUIRE(slots[1].bias_rad.has_value());
    CHECK(*slots[1].bias_rad == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(*slots[1].est_elevation == 220.0);
  }

  SUBCASE("no estimates leaves slots empty but keeps truth elevations") {
    const auto slots = match_steering_estimates({}, truths, elevs);
    REQUIRE(slots.size() == 2);
    CHECK(slots[0].true_elevation == 80.0);
    CHECK(slots[1].true_elevation == 220.0);
    CHECK_FALSE(slots[0].bias_rad.has_value());
    CHECK_FALSE(slots[1].bias_rad.has_value());
  }
}
