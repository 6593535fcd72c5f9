#include "spinorlab/io.hpp"
#include <bit>
#include <catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <unistd.h>

using namespace spinorlab;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / ("spinorlab_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}
} // namespace

TEST_CASE("SPF1 spinor dump round trips bit-exactly") {
  GridSpec g;
  g.n = 2;
  g.sizes = {6, 4};
  g.lengths = {1.0, 0.7};
  g.spin = {Spin::antiperiodic, Spin::periodic};
  SpinorField f(g, 2);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (auto &z : f.values)
    z = cplx(nd(rng), nd(rng));
  f.values[3] = cplx(std::numeric_limits<double>::denorm_min(), -0.0);

  const auto p = scratch_dir() / "f.spf";
  write_spf1(p, f);
  const std::string raw = slurp(p);
  CHECK(raw.rfind("SPF1 n=2 dims=6,4 lens=1,0.7 spin=ap fiber=2\n", 0) == 0);

  const SpinorField back = read_spf1_spinor(p);
  CHECK(back.grid == g);
  CHECK(back.fiber == 2);
  REQUIRE(back.values.size() == f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(back.values[i].real()) ==
          std::bit_cast<std::uint64_t>(f.values[i].real()));
    CHECK(std::bit_cast<std::uint64_t>(back.values[i].imag()) ==
          std::bit_cast<std::uint64_t>(f.values[i].imag()));
  }
}

TEST_CASE("SPF1 scalar dump round trips and rejects spinor payloads") {
  GridSpec g = GridSpec::cube(3, 4, 2.5);
  ScalarField s(g);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    s.values[i] = std::sin(0.1 * i) / 3.0;
  const auto dir = scratch_dir();
  write_spf1(dir / "s.spf", s);
  const ScalarField back = read_spf1_scalar(dir / "s.spf");
  CHECK(back.grid == g);
  CHECK(back.values == s.values);

  SpinorField f(g, 2);
  write_spf1(dir / "f2.spf", f);
  CHECK_THROWS(read_spf1_scalar(dir / "f2.spf"));
}

TEST_CASE("SPF1 reader rejects damaged files") {
  const auto dir = scratch_dir();
  SpinorField f(GridSpec::cube(1, 8, 1.0), 1);
  write_spf1(dir / "ok.spf", f);
  std::string raw = slurp(dir / "ok.spf");

  atomic_write(dir / "short.spf", raw.substr(0, raw.size() - 3));
  CHECK_THROWS(read_spf1_spinor(dir / "short.spf"));

  std::string bad = raw;
  bad[3] = '2';
  atomic_write(dir / "magic.spf", bad);
  CHECK_THROWS(read_spf1_spinor(dir / "magic.spf"));

  atomic_write(dir / "spin.spf", "SPF1 n=1 dims=2 lens=1 spin=x fiber=1\n" + std::string(32, '\0'));
  CHECK_THROWS(read_spf1_spinor(dir / "spin.spf"));

  atomic_write(dir / "nohdr.spf", "SPF1 n=1 dims=2");
  CHECK_THROWS(read_spf1_spinor(dir / "nohdr.spf"));
  CHECK_THROWS(read_spf1_spinor(dir / "missing.spf"));
}

TEST_CASE("atomic_write replaces contents and leaves no temporaries") {
  const auto dir = scratch_dir() / "aw";
  fs::remove_all(dir);
  fs::create_directories(dir);
  atomic_write(dir / "x.txt", "first");
  atomic_write(dir / "x.txt", "second");
  CHECK(slurp(dir / "x.txt") == "second");
  int entries = 0;
  for ([[maybe_unused]] auto &e : fs::directory_iterator(dir))
    ++entries;
  CHECK(entries == 1);
  CHECK_THROWS(atomic_write(dir / "nope" / "x.txt", "z"));
}

TEST_CASE("fmt is shortest round trip with a dot separator") {
  for (double x : {0.1, 1.0 / 3.0, 4.0538515, -2.5e-300, 1e22, 3.5449077018110318}) {
    const std::string s = fmt(x);
    CHECK(std::stod(s) == x);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(fmt(0.5) == "0.5");
  CHECK(fmt(2.0) == "2");
}

TEST_CASE("CSV table writes and reads back") {
  CsvTable t({"n", "re", "im"});
  t.add({"2", fmt(0.25), fmt(-1.5)});
  t.add({"3", fmt(1e-9), "0"});
  CHECK_THROWS(t.add({"4"}));
  CHECK(t.rows() == 2);
  CHECK(t.str() == "n,re,im\n2,0.25,-1.5\n3,1e-09,0\n");

  const auto p = scratch_dir() / "t.csv";
  atomic_write(p, t.str());
  const auto rows = read_csv(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].at("n") == "3");
  CHECK(std::stod(rows[0].at("im")) == -1.5);

  atomic_write(p, "a,b\n1,2,3\n");
  CHECK_THROWS(read_csv(p));
  atomic_write(p, "");
  CHECK_THROWS(read_csv(p));
}

TEST_CASE("config parsing with sections, comments, and rejections") {
  const auto cfg = parse_config("seed = 11  # rng\n"
                                "\n"
                                "[grid]\n"
                                "N=64\n"
                                "  L = 6.283 \n"
                                "[ solver ]\n"
                                "tolerance=1e-8\n");
  CHECK(cfg.size() == 4);
  CHECK(cfg.at("seed") == "11");
  CHECK(cfg.at("grid.N") == "64");
  CHECK(cfg.at("grid.L") == "6.283");
  CHECK(cfg.at("solver.tolerance") == "1e-8");

  CHECK_THROWS_AS(parse_config("[grid]\nN=1\nN=2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("N 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[grid\nN=4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("=4\n"), std::invalid_argument);
  // same key in different sections is fine
  CHECK(parse_config("[a]\nk=1\n[b]\nk=2\n").size() == 2);

  const auto p = scratch_dir() / "c.ini";
  atomic_write(p, "[run]\nname=x\n");
  CHECK(read_config(p).at("run.name") == "x");
}
