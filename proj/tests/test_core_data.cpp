#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "weakform/dataset.hpp"
#include "weakform/dataset_io.hpp"
#include "weakform/errors.hpp"
#include "weakform/fft.hpp"
#include "weakform/grid.hpp"
#include "weakform/models.hpp"
#include "weakform/noise.hpp"
#include "weakform/rng.hpp"

using namespace weakform;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

Dataset synthetic_dataset(std::int64_t nx, std::int64_t nt, int components,
                          std::uint64_t seed) {
  Grid g = make_grid({Axis{nx, 0.0, 1.0}, Axis{nt, 0.0, 2.0}});
  Rng rng(seed);
  std::vector<double> vals(static_cast<std::size_t>(g.num_points()) *
                           static_cast<std::size_t>(components));
  for (double& v : vals) v = rng.normal();
  return Dataset(g, components, std::move(vals));
}

}  // namespace

TEST_CASE("axis spacing of a two point unit axis is one") {
  Grid g = make_grid({Axis{2, 0.0, 1.0}});
  CHECK(g.spacing(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.num_points() == 2);
}

TEST_CASE("grid spacings follow (hi - lo)/(n - 1)") {
  const double pi = std::numbers::pi;
  Grid g = make_grid({Axis{256, 0.0, 2.0 * pi}, Axis{301, 0.0, 150.0}});
  CHECK(g.spacing(0) == doctest::Approx(2.0 * pi / 255.0).epsilon(1e-15));
  CHECK(g.spacing(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.num_points() == 256 * 301);
  CHECK(g.coord(0, 255) == doctest::Approx(2.0 * pi).epsilon(1e-15));
  CHECK(g.coord(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("degenerate axes are rejected") {
  CHECK_THROWS_AS(make_grid({Axis{1, 0.0, 1.0}}), ValueError);
  CHECK_THROWS_AS(make_grid({Axis{8, 1.0, 1.0}}), ValueError);
  CHECK_THROWS_AS(make_grid({Axis{8, 2.0, 1.0}}), ValueError);
  CHECK_THROWS_AS(make_grid({}), ValueError);
}

TEST_CASE("dataset indexing is row major with component innermost") {
  Grid g = make_grid({Axis{3, 0.0, 1.0}, Axis{4, 0.0, 1.0}});
  std::vector<double> vals(3 * 4 * 2);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<double>(i);
  Dataset d(g, 2, std::move(vals));
  std::vector<std::int64_t> idx = {2, 3};
  CHECK(d.flat_index(idx, 1) == (2 * 4 + 3) * 2 + 1);
  CHECK(d.value(idx, 1) == doctest::Approx(23.0));
  CHECK(d.num_samples() == 12);
}

TEST_CASE("dataset validates value count and finiteness") {
  Grid g = make_grid({Axis{2, 0.0, 1.0}});
  CHECK_THROWS_AS(Dataset(g, 1, std::vector<double>{1.0, 2.0, 3.0}), ValueError);
  CHECK_THROWS_AS(Dataset(g, 0, std::vector<double>{}), ValueError);
  CHECK_THROWS_AS(Dataset(g, 1, std::vector<double>{1.0, std::nan("")}), ValueError);
}

TEST_CASE("noise level zero returns the data unchanged") {
  Dataset d = synthetic_dataset(16, 8, 1, 7);
  Dataset noisy = add_noise(d, NoiseSpec{NoiseKind::GaussianAdditive, 0.0, 99});
  CHECK(noisy.values() == d.values());
}

TEST_CASE("noise sampling is deterministic for a fixed seed") {
  Dataset d = synthetic_dataset(16, 8, 2, 3);
  NoiseSpec spec{NoiseKind::GaussianAdditive, 0.3, 1234};
  Dataset a = add_noise(d, spec);
  Dataset b = add_noise(d, spec);
  CHECK(a.values() == b.values());
  Dataset c = add_noise(d, NoiseSpec{NoiseKind::GaussianAdditive, 0.3, 1235});
  CHECK(a.values() != c.values());
}

TEST_CASE("fifty percent noise on a chaotic field hits the requested ratio") {
  // 256 x 301 samples: the law of large numbers pins the realized noise RMS
  // to sigma = level * RMS(clean) within two percent.
  Dataset clean = builtin_ks().simulate(0);
  REQUIRE(clean.grid().axis_size(0) == 256);
  REQUIRE(clean.grid().axis_size(1) == 301);
  Dataset noisy = add_noise(clean, NoiseSpec{NoiseKind::GaussianAdditive, 0.5, 21});
  double num = 0.0;
  for (std::size_t i = 0; i < clean.values().size(); ++i) {
    double e = noisy.values()[i] - clean.values()[i];
    num += e * e;
  }
  double ratio = std::sqrt(num / static_cast<double>(clean.values().size())) / clean.rms();
  CHECK(ratio > 0.49);
  CHECK(ratio < 0.51);
}

TEST_CASE("empirical noise std tracks the requested level across seeds") {
  Dataset d = synthetic_dataset(64, 200, 1, 11);
  double rms = d.rms();
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Dataset noisy = add_noise(d, NoiseSpec{NoiseKind::GaussianAdditive, 1.0, seed});
    double num = 0.0;
    for (std::size_t i = 0; i < d.values().size(); ++i) {
      double e = noisy.values()[i] - d.values()[i];
      num += e * e;
    }
    double ratio = std::sqrt(num / static_cast<double>(d.values().size())) / rms;
    CHECK(ratio > 0.97);
    CHECK(ratio < 1.03);
  }
}

TEST_CASE("negative noise level is rejected") {
  Dataset d = synthetic_dataset(16, 8, 1, 7);
  CHECK_THROWS_AS(add_noise(d, NoiseSpec{NoiseKind::GaussianAdditive, -0.1, 0}), ValueError);
}

TEST_CASE("binary round trip is bit exact") {
  Dataset d = synthetic_dataset(3, 4, 2, 17);
  auto path = temp_file("core_roundtrip.bin");
  write_dataset(d, path.string(), FileFormat::Binary);
  Dataset back = read_dataset(path.string(), FileFormat::Binary);
  CHECK(back.grid() == d.grid());
  CHECK(back.components() == d.components());
  CHECK(back.values() == d.values());
  std::filesystem::remove(path);
}

TEST_CASE("csv round trip preserves pi to full precision") {
  Grid g = make_grid({Axis{2, 0.0, 1.0}});
  Dataset d(g, 1, {std::numbers::pi, -std::numbers::pi});
  auto path = temp_file("core_roundtrip.csv");
  write_dataset(d, path.string(), FileFormat::Csv);
  Dataset back = read_dataset(path.string(), FileFormat::Csv);
  CHECK(std::abs(back.values()[0] - std::numbers::pi) <= 1e-15 * std::numbers::pi);
  CHECK(back.values()[0] == std::numbers::pi);  // shortest round-trip formatting
  CHECK(back.values()[1] == -std::numbers::pi);
  std::filesystem::remove(path);
}

TEST_CASE("csv with wrong column count is rejected") {
  Grid g = make_grid({Axis{2, 0.0, 1.0}, Axis{3, 0.0, 1.0}});
  Dataset d(g, 2, std::vector<double>(12, 1.0));
  auto path = temp_file("core_badcols.csv");
  write_dataset(d, path.string(), FileFormat::Csv);

  // Truncate one value on a data row.
  std::vector<std::string> lines;
  {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string all;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) all.append(buf, got);
    std::fclose(f);
    std::size_t pos = 0;
    while (pos < all.size()) {
      std::size_t nl = all.find('\n', pos);
      if (nl == std::string::npos) nl = all.size();
      lines.push_back(all.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }
  for (std::string& line : lines) {
    if (!line.empty() && line[0] != '#') {
      line = line.substr(0, line.rfind(','));
      break;
    }
  }
  {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    for (const std::string& line : lines) {
      std::fwrite(line.data(), 1, line.size(), f);
      std::fputc('\n', f);
    }
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_dataset(path.string(), FileFormat::Csv), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("missing file raises an io error") {
  CHECK_THROWS_AS(read_dataset("/nonexistent/dir/data.csv", FileFormat::Csv), IoError);
  CHECK_THROWS_AS(read_dataset("/nonexistent/dir/data.bin", FileFormat::Binary), IoError);
}

TEST_CASE("binary format rejects a corrupted magic header") {
  auto path = temp_file("core_badmagic.bin");
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fwrite("NOPE", 1, 4, f);
  std::fclose(f);
  CHECK_THROWS_AS(read_dataset(path.string(), FileFormat::Binary), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("format_double emits shortest round-trip decimals") {
  for (double v : {0.5, 1.0 / 3.0, std::numbers::pi, -1e-7, 12345678.9, 0.0}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("fft round trip and analytic spike") {
  const int n = 64;
  RealFft fft(n);
  std::vector<double> x(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = std::cos(2.0 * pi * 3.0 * i / n);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.spectrum_size()));
  fft.forward(x.data(), spec.data());
  // cos(2*pi*3 i/n) -> bin 3 = n/2, all other one-sided bins ~ 0.
  CHECK(spec[3].real() == doctest::Approx(n / 2.0).epsilon(1e-12));
  CHECK(std::abs(spec[3].imag()) < 1e-9);
  for (int k = 0; k <= n / 2; ++k) {
    if (k == 3) continue;
    CHECK(std::abs(spec[static_cast<std::size_t>(k)]) < 1e-9);
  }
  std::vector<double> back(n);
  fft.inverse(spec.data(), back.data());
  for (int i = 0; i < n; ++i)
    CHECK(back[static_cast<std::size_t>(i)] ==
          doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("rng streams are deterministic and well scaled") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  Rng c(1);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));

  Rng d(2);
  double nsum = 0.0, nsum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = d.normal();
    nsum += z;
    nsum2 += z * z;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(nsum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derive_seed decorrelates task indices") {
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(0, 1) == derive_seed(0, 1));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
}
