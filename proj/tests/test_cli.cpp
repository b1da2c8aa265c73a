#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "mfh/config.hpp"
#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/plot.hpp"

using namespace mfh;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MFH_CLI) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("mfh_test_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config resolution order and validation") {
  const auto c = parse_config("simulate", {{"h", "0.75"}, {"n_grid", "256"}}, {{"n_grid", "512"}});
  CHECK(c.real("h") == 0.75);
  CHECK(c.integer("n_grid") == 512);
  CHECK(c.integer("d") == 1);

  try {
    parse_config("simulate", {{"h", "0.4"}}, {});
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'h'") != std::string::npos);
    CHECK(msg.find("(0.5, 1)") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("simulate", {{"colour", "red"}}, {}), ValidationError);
  CHECK_THROWS_AS(parse_config("simulate", {{"n_grid", "many"}}, {}), ValidationError);
  CHECK_THROWS_AS(parse_config("simulate", {{"hurst", "wiggly"}}, {}), ValidationError);
  CHECK_THROWS_AS(parse_config("nonsense", {}, {}), ValidationError);
}

TEST_CASE("config files parse and dump round trips") {
  const auto kv = parse_key_values("# comment\nh = 0.8   # trailing\n\nd=2\n");
  CHECK(kv.at("h") == "0.8");
  CHECK(kv.at("d") == "2");
  CHECK_THROWS_AS(parse_key_values("h 0.8\n"), ValidationError);

  const auto c = parse_config("estimate", {{"h", "0.8"}, {"t0", "0.25"}}, {});
  const auto back = parse_config("estimate", parse_key_values(c.dump()), {});
  CHECK(back.values == c.values);
}

TEST_CASE("SVG plots") {
  const std::string csv = "x,y\n1,2\n2,4\n4,8\n8,16\n16,32\n";
  const auto svg = render_svg(csv, {});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "class=\"curve\"") == 1);
  const auto curve = svg.substr(svg.find("class=\"curve\""));
  const auto d = curve.substr(0, curve.find("/>"));
  CHECK(count(d, "M") + count(d, "L") == 5);

  PlotStyle logs;
  logs.log_x = logs.log_y = true;
  logs.fit = true;
  const auto lsvg = render_svg(csv, logs);
  CHECK(lsvg.find("2^") != std::string::npos);
  CHECK(render_svg(csv, logs) == lsvg);

  // only the plotted columns need to be numeric
  CHECK_NOTHROW(render_svg("param,value,norm\nh,0.6,1\nh,0.7,2\n", {1, 2}));
  try {
    render_svg("x,y\n1,2\n2,oops\n", {});
    FAIL("expected MalformedCsv");
  } catch (const MalformedCsv& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("command-line exit codes and outputs") {
  TempDir tmp;
  const std::string out = " --out-dir " + tmp.path.string();
  CHECK(run("--help") == 0);
  CHECK(run("simulate --h 0.4" + out) == 2);
  CHECK(run("simulate --bogus 1" + out) == 2);
  CHECK(run("simulate --d 3 --h 0.7 --n-grid 8192" + out) == 3);
  CHECK(run("simulate --d 2 --h 0.7 --n-grid 128 --j 6" + out) == 0);
  CHECK(fs::exists(tmp.path / "path.csv"));
  CHECK(fs::exists(tmp.path / "path.meta.json"));

  write_text(tmp.path / "run.cfg", "h = 0.8\nn_grid = 64\nj = 6\n");
  CHECK(run("simulate --config " + (tmp.path / "run.cfg").string() + " --stem cfg" + out) == 0);
  CHECK(read_path(tmp.path / "cfg").meta.hurst.params().front() == 0.8);

  CHECK(run("verify variance-scaling-d1" + out) == 0);
  CHECK(fs::exists(tmp.path / "verify" / "variance-scaling-d1.json"));
  CHECK(run("verify no-such-experiment" + out) == 2);

  write_text(tmp.path / "c.csv", "x,y\n1,1\n2,2\n3,3\n");
  CHECK(run("plot --input " + (tmp.path / "c.csv").string() + " --stem c" + out) == 0);
  CHECK(fs::exists(tmp.path / "c.svg"));
}
