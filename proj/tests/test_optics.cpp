#include <cmath>
#include <complex>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "insitu/errors.hpp"
#include "insitu/optics/bench.hpp"
#include "insitu/optics/field.hpp"
#include "insitu/optics/imperfections.hpp"
#include "insitu/optics/modulation.hpp"
#include "insitu/optics/propagation.hpp"
#include "insitu/optics/sensor.hpp"
#include "insitu/optics/snapshot_io.hpp"
#include "insitu/rng.hpp"

using namespace insitu;
using namespace insitu::optics;

namespace {

constexpr double kPitch = 8.0;
constexpr double kLambda = 0.52;

ComplexField random_field(Shape shape, std::uint64_t seed) {
  Rng rng = make_rng(seed, 99);
  std::normal_distribution<double> n(0.0, 1.0);
  Grid<Complex> g(shape);
  for (auto& v : g.values()) v = {n(rng), n(rng)};
  return ComplexField(std::move(g), kPitch, kLambda);
}

// Field whose spectrum lives well inside the propagating band and away from
// the padded window's edges, so free-space propagation is lossless.
ComplexField smooth_field(Shape shape, std::uint64_t seed) {
  Rng rng = make_rng(seed, 7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid<Complex> g(shape);
  const double cr = shape.rows / 2.0, cc = shape.cols / 2.0;
  const double w = shape.rows / 8.0;
  double a = u(rng), b = u(rng), c = u(rng);
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t col = 0; col < shape.cols; ++col) {
      const double y = (r - cr) / w, x = (col - cc) / w;
      g(r, col) = std::exp(-(x * x + y * y) / 2.0) * std::polar(1.0, a * x + b * y + c * x * y * 0.1);
    }
  }
  return ComplexField(std::move(g), kPitch, kLambda);
}

double rel_rms(const Grid<Complex>& a, const Grid<Complex>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

Complex inner(const Grid<Complex>& a, const Grid<Complex>& b) {
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// Rayleigh-Sommerfeld (first kind) by direct summation over source pixels:
// U(x) = sum U0(x') * z/r * (1/(2 pi r) - i/lambda) * exp(i k r) / r * dA.
Grid<Complex> rayleigh_sommerfeld(const ComplexField& src, double distance_mm) {
  const double z = distance_mm * 1000.0;
  const double k = kTwoPi / kLambda;
  const Shape s = src.shape();
  Grid<Complex> out(s);
  const double area = kPitch * kPitch;
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      Complex acc{};
      for (std::size_t r2 = 0; r2 < s.rows; ++r2) {
        for (std::size_t c2 = 0; c2 < s.cols; ++c2) {
          const Complex u0 = src(r2, c2);
          if (u0 == Complex{}) continue;
          const double dy = (double(r) - double(r2)) * kPitch;
          const double dx = (double(c) - double(c2)) * kPitch;
          const double rr = std::sqrt(dx * dx + dy * dy + z * z);
          const Complex kernel = (z / rr) * Complex(1.0 / (kTwoPi * rr), -1.0 / kLambda) *
                                 std::polar(1.0, k * rr) / rr;
          acc += u0 * kernel * area;
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("field construction validates shape and values") {
  CHECK_THROWS_AS(ComplexField(Shape{12, 16}, kPitch, kLambda), DimensionError);
  Grid<Complex> g(Shape{4, 4});
  g[3] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(ComplexField(g, kPitch, kLambda), Error);
  CHECK(wrap_phase(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_phase(kTwoPi) == 0.0);
  const PhaseMap p(Shape{2, 2}, {-1.0, 7.0, 3.0, 12.0});
  const PhaseMap w = p.wrapped();
  for (double v : w.values()) {
    CHECK(v >= 0.0);
    CHECK(v < kTwoPi);
  }
}

TEST_CASE("propagation over zero distance is the identity") {
  const ComplexField f = random_field({16, 16}, 1);
  CHECK(propagate(f, 0.0) == f);
}

TEST_CASE("plane wave stays uniform and keeps its energy") {
  for (double d : {1.0, 100.0, 250.0}) {
    const ComplexField plane(Shape{32, 32}, kPitch, kLambda);
    // An unpadded propagator treats the plane wave as the DC mode exactly.
    const AngularSpectrumPropagator prop({32, 32}, kPitch, kLambda, d, 1);
    const ComplexField out = prop(plane);
    const double e0 = plane.total_energy();
    CHECK(std::abs(out.total_energy() - e0) / e0 < 1e-6);
    const double i0 = std::norm(out(0, 0));
    for (const auto& v : out.amplitude().values()) CHECK(std::abs(std::norm(v) - i0) < 1e-9);
  }
}

TEST_CASE("angular spectrum agrees with a direct Rayleigh-Sommerfeld sum") {
  // Gaussian spot (sigma 1.5 px) on a 16x16 grid, 5 mm: the source is
  // band-limited, so the sampled RS integral and the AS method must agree.
  const Shape s{16, 16};
  Grid<Complex> g(s);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      const double y = double(r) - 8.0, x = double(c) - 8.0;
      g(r, c) = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
    }
  }
  const ComplexField src(g, kPitch, kLambda);
  const double d = 5.0;
  // Wide padding so the periodic AS domain does not wrap the spreading beam.
  const AngularSpectrumPropagator as(s, kPitch, kLambda, d, 8);
  const auto oracle = rayleigh_sommerfeld(src, d);
  const double err = rel_rms(as(src).amplitude(), oracle);
  MESSAGE("AS vs RS relative RMS = " << err);
  CHECK(err < 1e-3);
}

TEST_CASE("propagation invariants: unitarity reciprocity adjointness") {
  const Shape s{64, 64};
  const double d = 100.0;
  const ComplexField u = smooth_field(s, 3);
  // Without padding the propagator is a pure phase on every (propagating) mode
  // of the periodic grid, so any field keeps its energy.
  {
    const AngularSpectrumPropagator fwd(s, kPitch, kLambda, d, 1);
    const AngularSpectrumPropagator back(s, kPitch, kLambda, -d, 1);
    const ComplexField v = fwd(u);
    CHECK(std::abs(v.total_energy() - u.total_energy()) / u.total_energy() < 1e-6);
    CHECK(rel_rms(back(v).amplitude(), u.amplitude()) < 1e-6);
  }
  // Padded: a beam that stays inside the window keeps its energy too.
  {
    Grid<Complex> g(s);
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        const double y = double(r) - 32.0, x = double(c) - 32.0;
        g(r, c) = std::polar(std::exp(-(x * x + y * y) / (2.0 * 4.0 * 4.0)), 0.01 * x);
      }
    }
    const ComplexField beam(g, kPitch, kLambda);
    const AngularSpectrumPropagator fwd(s, kPitch, kLambda, 5.0);
    const AngularSpectrumPropagator back(s, kPitch, kLambda, -5.0);
    const ComplexField v = fwd(beam);
    CHECK(std::abs(v.total_energy() - beam.total_energy()) / beam.total_energy() < 1e-6);
    CHECK(rel_rms(back(v).amplitude(), beam.amplitude()) < 1e-6);
  }

  const AngularSpectrumPropagator fwd(s, kPitch, kLambda, d);
  const AngularSpectrumPropagator back(s, kPitch, kLambda, -d);

  const ComplexField a = random_field(s, 4), b = random_field(s, 5);
  const Complex lhs = inner(fwd(a).amplitude(), b.amplitude());
  const Complex rhs = inner(a.amplitude(), back(b).amplitude());
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-8);
  // adjoint() is the exact adjoint also with a shifted crop window.
  const Complex lhs2 = inner(fwd.propagate(a, 0, 2).amplitude(), b.amplitude());
  const Complex rhs2 = inner(a.amplitude(), fwd.adjoint(b, 0, 2).amplitude());
  CHECK(std::abs(lhs2 - rhs2) / std::abs(lhs2) < 1e-8);
}

TEST_CASE("apply_phase") {
  const ComplexField f = random_field({8, 8}, 6);
  CHECK(apply_phase(f, PhaseMap({8, 8})) == f);
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  PhaseMap p1({8, 8}), p2({8, 8});
  for (std::size_t i = 0; i < p1.size(); ++i) {
    p1[i] = u(rng);
    p2[i] = u(rng);
  }
  const ComplexField out = apply_phase(f, p1);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(std::abs(out.amplitude()[i]) == doctest::Approx(std::abs(f.amplitude()[i])).epsilon(1e-15));
  }
  const ComplexField two = apply_phase(apply_phase(f, p1), p2);
  const ComplexField sum = apply_phase(f, (p1 + p2).wrapped());
  CHECK(rel_rms(two.amplitude(), sum.amplitude()) < 1e-12);
  CHECK_THROWS_AS(apply_phase(f, PhaseMap({4, 4})), DimensionError);
}

TEST_CASE("quantize_phase") {
  CHECK(quantize_value(std::numbers::pi, 8) == 128 * (kTwoPi / 256));
  CHECK(quantize_value(std::numbers::pi, 8) == std::numbers::pi);
  CHECK(quantize_value(kTwoPi - 1e-6, 8) == 0.0);
  const PhaseMap p({1, 4}, {0.1, 1.7, 3.3, 6.0});
  const PhaseMap q = quantize_phase(p, 1);
  for (double v : q.values()) CHECK((v == 0.0 || v == std::numbers::pi));
  CHECK_THROWS_AS(quantize_phase(p, 0), ConfigError);
  CHECK_THROWS_AS(quantize_phase(p, 17), ConfigError);
}

TEST_CASE("diffuser") {
  const Shape s{64, 64};
  CHECK(make_diffuser(3, 4.0, s) == make_diffuser(3, 4.0, s));
  const PhaseMap d3 = make_diffuser(3, 4.0, s);
  for (double v : d3.values()) {
    CHECK(v >= 0.0);
    CHECK(v < kTwoPi);
  }
  // Raw screen: chi-square against uniform over 16 bins, p > 0.01 (df 15).
  const PhaseMap raw = make_diffuser(11, 0.0, s);
  std::vector<double> bins(16, 0.0);
  for (double v : raw.values()) bins[std::min<std::size_t>(15, std::size_t(v / kTwoPi * 16))] += 1;
  const double expected = 4096.0 / 16;
  double chi2 = 0.0;
  for (double b : bins) chi2 += (b - expected) * (b - expected) / expected;
  CHECK(chi2 < 30.58);  // chi2 quantile 0.99 for 15 dof

  // Independent raw screens for different seeds.
  const PhaseMap a = make_diffuser(1, 0.0, s), b = make_diffuser(2, 0.0, s);
  const auto va = a.values(), vb = b.values();
  const double ma = std::accumulate(va.begin(), va.end(), 0.0) / 4096;
  const double mb = std::accumulate(vb.begin(), vb.end(), 0.0) / 4096;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < 4096; ++i) {
    sab += (va[i] - ma) * (vb[i] - mb);
    saa += (va[i] - ma) * (va[i] - ma);
    sbb += (vb[i] - mb) * (vb[i] - mb);
  }
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.1);
}

TEST_CASE("zernike aberrations") {
  const Shape s{128, 128};
  const PhaseMap flat = zernike_phase({}, s);
  for (double v : flat.values()) CHECK(v == 0.0);
  const PhaseMap def = zernike_phase({.defocus = 0.7}, s);
  CHECK(def(64, 64) == doctest::Approx(-0.7 * std::sqrt(3.0)));
  CHECK(def(64, 64 + 20) == doctest::Approx(def(64 + 20, 64)));
  CHECK(def(64 - 12, 64) == doctest::Approx(def(64, 64 + 12)));

  const ZernikeCoefficients c{0.5, 0.3, 0.2};
  const PhaseMap z = zernike_phase(c, s);
  double sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < 128; ++r) {
    for (std::size_t col = 0; col < 128; ++col) {
      const double y = (double(r) - 64) / 64, x = (double(col) - 64) / 64;
      if (x * x + y * y > 1.0) {
        CHECK(z(r, col) == 0.0);
        continue;
      }
      sum2 += z(r, col) * z(r, col);
      ++n;
    }
  }
  const double rms = std::sqrt(sum2 / double(n));
  CHECK(rms == doctest::Approx(std::sqrt(0.25 + 0.09 + 0.04)).epsilon(0.02));
}

TEST_CASE("sensor measurement") {
  const ComplexField ones(Shape{8, 8}, kPitch, kLambda);
  Rng rng = make_rng(0);
  const IntensityImage m1 = measure(ones, NoiseModel::disabled(), rng);
  for (double v : m1.values()) CHECK(v == 1.0);

  const ComplexField f = smooth_field({16, 16}, 2);
  Rng r1 = make_rng(5), r2 = make_rng(5);
  CHECK(measure(f, NoiseModel{}, r1) == measure(f, NoiseModel{}, r2));

  // Monte-Carlo mean of noisy draws vs the expected photon counts.
  NoiseModel nm;
  nm.photon_budget = 1e6;
  nm.read_sigma = 0.0;
  const IntensityImage clean = measure(f, NoiseModel::disabled(), rng);
  const double total = clean.total();
  std::vector<double> mean(clean.size(), 0.0);
  const int draws = 1000;
  for (int k = 0; k < draws; ++k) {
    const auto img = measure(f, nm, rng);
    for (std::size_t i = 0; i < img.size(); ++i) mean[i] += img[i] / draws;
  }
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double expect = nm.photon_budget * clean[i] / total;
    const double sd = std::sqrt(std::max(expect, 1e-12));
    CHECK(std::abs(mean[i] - expect) <= 5 * sd / std::sqrt(double(draws)) + 1e-9);
  }
}

TEST_CASE("detector layout and energies") {
  const IntensityImage ones(Shape{64, 64}, 1.0);
  std::vector<Region> regions;
  for (std::size_t k = 0; k < 10; ++k) regions.push_back({2 + 6 * k, 3, 4, 4});
  const DetectorLayout layout(regions);
  for (double e : detector_energies(ones, layout)) CHECK(e == 16.0);

  std::vector<double> vals(64 * 64, 0.0);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) vals[(regions[3].row + r) * 64 + regions[3].col + c] = 2.5;
  const auto e3 = detector_energies(IntensityImage({64, 64}, vals), layout);
  for (std::size_t k = 0; k < 10; ++k) CHECK((e3[k] != 0.0) == (k == 3));

  Rng rng = make_rng(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (double& v : vals) v = u(rng);
  const IntensityImage img({64, 64}, vals);
  const auto grid = DetectorLayout::grid_2x5({64, 64});
  CHECK(grid.size() == 10);
  const auto e = detector_energies(img, grid);
  for (std::size_t k = 0; k < 10; ++k) {
    const Region& g = grid.regions()[k];
    double s = 0.0;
    for (std::size_t r = g.row; r < g.row + g.height; ++r)
      for (std::size_t c = g.col; c < g.col + g.width; ++c) s += img(r, c);
    CHECK(e[k] == s);
  }
  CHECK_THROWS_AS(detector_energies(IntensityImage({8, 8}, 1.0), layout), LayoutError);
  CHECK_THROWS_AS(DetectorLayout({{0, 0, 4, 4}, {2, 2, 4, 4}}).validate_for({8, 8}), LayoutError);
}

TEST_CASE("run_bench pipeline") {
  BenchConfig cfg;
  cfg.distance_mm = 0.0;
  cfg.noise.enabled = false;
  Rng rng = make_rng(0);
  const PhaseMap zero(cfg.shape);
  const IntensityImage id = run_bench(cfg, nullptr, zero, rng);
  for (double v : id.values()) CHECK(v == doctest::Approx(1.0));

  BenchConfig noisy;
  noisy.diffuser = DiffuserConfig{};
  noisy.aberration = AberrationConfig{{0.5, 0.3, 0.2}, 0, 2};
  Rng a = make_rng(4), b = make_rng(4);
  const PhaseMap p = make_diffuser(9, 2.0, noisy.shape);
  CHECK(run_bench(noisy, nullptr, p, a) == run_bench(noisy, nullptr, p, b));

  // Composition without imperfections: quantize -> apply_phase -> propagate -> measure.
  BenchConfig plain;
  plain.noise.enabled = false;
  Rng c = make_rng(0);
  const IntensityImage got = run_bench(plain, nullptr, p, c);
  const ComplexField field = apply_phase(ComplexField(plain.shape, plain.pitch_um, plain.wavelength_um),
                                         quantize_phase(p, plain.slm_bits));
  const IntensityImage want = measure(propagate(field, plain.distance_mm), NoiseModel::disabled(), c);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

  CHECK_THROWS_AS(run_bench(plain, nullptr, PhaseMap({32, 32}), c), DimensionError);
}

TEST_CASE("intensity VJP matches finite differences") {
  BenchConfig cfg;
  cfg.shape = {16, 16};
  cfg.distance_mm = 20.0;
  cfg.noise.enabled = false;
  cfg.aberration = AberrationConfig{{0.4, 0.2, 0.1}, 1, -1};
  const ForwardModel model(cfg);
  Rng rng = make_rng(2);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  PhaseMap phase(cfg.shape);
  std::vector<double> w(cfg.shape.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    phase[i] = u(rng);
    w[i] = u(rng) - 3.0;
  }
  auto f = [&](const PhaseMap& p) {
    const IntensityImage img = model.intensity(p);
    double s = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) s += w[i] * img[i];
    return s;
  };
  const auto grad = model.intensity_vjp(phase, w);
  for (std::size_t i : {0u, 17u, 100u, 255u}) {
    PhaseMap plus = phase, minus = phase;
    plus[i] += 1e-5;
    minus[i] -= 1e-5;
    const double fd = (f(plus) - f(minus)) / 2e-5;
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-9));
  }
}

TEST_CASE("snapshot formats") {
  const auto dir = std::filesystem::temp_directory_path() / "insitu_test_snap";
  std::filesystem::create_directories(dir);
  Grid<double> g({4, 8});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.25 * double(i) - 1.0;
  write_raw(dir / "a.opb", g, RawDtype::kFloat64);
  CHECK(read_raw(dir / "a.opb") == g);
  const auto bytes = encode_raw(g, RawDtype::kFloat32);
  CHECK(bytes.size() == 16 + 4 * 32);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "OPB1");
  CHECK(decode_raw(bytes) == g);  // quarter steps are exact in float32
  auto bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_raw(bad), FormatError);

  write_pgm(dir / "a.pgm", g);
  const PgmImage pgm = read_pgm(dir / "a.pgm");
  CHECK(pgm.has_range);
  CHECK(pgm.recorded_min == doctest::Approx(-1.0));
  CHECK(pgm.recorded_max == doctest::Approx(6.75));
  CHECK(pgm.values[0] == 0.0);
  CHECK(pgm.values[31] == 1.0);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
