#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "polyinit/net.hpp"
#include "test_files.hpp"

using polyinit::testing::read_file;
using polyinit::testing::TempDir;
using polyinit::testing::write_file;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = polyinit::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("build") {
    TempDir tmp;
    const std::string net = (tmp.path / "sq.net").string();
    const Outcome sq = cli({"build", "squaring", "--depth", "4", "--out", net});
    REQUIRE(sq.code == 0);
    CHECK(sq.out.find("error_bound 0.00390625\n") != std::string::npos);
    CHECK(sq.out.find("shape 1 4 4 4 4 1\n") != std::string::npos);
    CHECK(read_file(net + ".layout.json").find("polyinit-layout") != std::string::npos);

    const Outcome st = cli({"build", "stilde", "--dim", "4", "--depth", "3", "--out", (tmp.path / "s.net").string()});
    REQUIRE(st.code == 0);
    CHECK(st.out.find("shape 4 28 28 28 1\n") != std::string::npos);

    const Outcome mono =
        cli({"build", "monomial", "--index", "2,1", "--depth", "5", "--out", (tmp.path / "m.net").string()});
    CHECK(mono.code == 0);

    CHECK(cli({"build", "squaring", "--interval", "1", "1", "--out", net}).code == 2);
    CHECK(cli({"build", "squaring", "--depth", "0", "--out", net}).code == 2);
    CHECK(cli({"build", "pentagon", "--out", net}).code == 2);
    CHECK(cli({"build", "squaring"}).code == 2);
  }

  TEST_CASE("eval") {
    TempDir tmp;
    const std::string net = (tmp.path / "sq.net").string();
    REQUIRE(cli({"build", "squaring", "--depth", "3", "--out", net}).code == 0);
    write_file(tmp.path / "pts.csv", "x\n-1\n-0.25\n0.5\n1\n");
    const Outcome e = cli({"eval", "--net", net, "--points", (tmp.path / "pts.csv").string()});
    REQUIRE(e.code == 0);
    // Breakpoints of the depth-3 interpolant are exact.
    CHECK(e.out == "output\n1\n0.0625\n0.25\n1\n");

    write_file(tmp.path / "id.net", "polyinit-net 1\nshape 1 1\nlayer 1 1 identity\n1 0\n");
    write_file(tmp.path / "one.csv", "1.5\n");
    const Outcome id = cli({"eval", "--net", (tmp.path / "id.net").string(), "--points", (tmp.path / "one.csv").string()});
    CHECK(id.code == 0);
    CHECK(id.out == "output\n1.5\n");

    write_file(tmp.path / "two.csv", "1,2\n");
    CHECK(cli({"eval", "--net", net, "--points", (tmp.path / "two.csv").string()}).code == 2);
    CHECK(cli({"eval", "--net", (tmp.path / "missing").string(), "--points", (tmp.path / "one.csv").string()}).code == 2);
  }

  TEST_CASE("train") {
    TempDir tmp;
    const std::string net = (tmp.path / "sq.net").string();
    REQUIRE(cli({"build", "squaring", "--depth", "3", "--out", net}).code == 0);
    write_file(tmp.path / "data.csv", "x,y\n-1,1\n-0.5,0.25\n0,0\n0.3,0.09\n1,1\n");
    const std::string out = (tmp.path / "trained.net").string();
    const Outcome t = cli({"train", "--net", net, "--data", (tmp.path / "data.csv").string(), "--out", out, "--epochs",
                           "5", "--freeze", "output-only", "--loss", (tmp.path / "loss.csv").string()});
    REQUIRE(t.code == 0);
    CHECK(polyinit::load_net(out).depth() == polyinit::load_net(net).depth());
    CHECK(read_file(tmp.path / "loss.csv").rfind("epoch,train_loss", 0) == 0);
    CHECK(cli({"train", "--net", net, "--data", (tmp.path / "data.csv").string(), "--out", out, "--freeze",
               "structural"})
              .code == 2);
    CHECK(cli({"train", "--net", net, "--data", (tmp.path / "data.csv").string(), "--out", out, "--freeze", "bogus"})
              .code == 2);
  }

  TEST_CASE("experiment") {
    TempDir tmp;
    write_file(tmp.path / "runge.json",
               R"({"format": "polyinit-config", "version": 1, "experiment": "runge",
                   "config": {"depth": 4, "grid_points": 51, "optimizer": {"epochs": 10}}})");
    const std::string config = (tmp.path / "runge.json").string();
    const Outcome a = cli({"experiment", "runge", "--config", config, "--out", (tmp.path / "a").string()});
    const Outcome b = cli({"experiment", "runge", "--config", config, "--out", (tmp.path / "b").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    for (const char* name : {"grid.csv", "loss_poly_init.csv", "manifest.json"})
      CHECK(read_file(tmp.path / "a" / name) == read_file(tmp.path / "b" / name));
    CHECK(a.out.find("construction_bound ") != std::string::npos);

    // Existing output is left alone without --force.
    CHECK(cli({"experiment", "runge", "--config", config, "--out", (tmp.path / "a").string()}).code == 2);
    CHECK(cli({"experiment", "runge", "--config", config, "--out", (tmp.path / "a").string(), "--force", "--epochs",
               "2"})
              .code == 0);
    CHECK(read_file(tmp.path / "a" / "manifest.json").find("\"epochs\": 2") != std::string::npos);

    const Outcome g = cli({"experiment", "genz", "--dim", "20", "--epochs", "0", "--out", (tmp.path / "g").string()});
    REQUIRE(g.code == 0);
    CHECK(g.out.find("width 156\n") != std::string::npos);

    const Outcome unknown = cli({"experiment", "sorcery", "--out", (tmp.path / "u").string()});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("runge | two-phase | cos4pi | genz") != std::string::npos);

    write_file(tmp.path / "bad.json", R"({"format": "polyinit-config", "version": 1, "config": {"sampels": 3}})");
    CHECK(cli({"experiment", "runge", "--config", (tmp.path / "bad.json").string(), "--out",
               (tmp.path / "x").string()})
              .code == 2);
    CHECK(cli({"experiment", "cos4pi", "--config", config, "--out", (tmp.path / "y").string()}).code == 2);
  }

  TEST_CASE("verify and usage") {
    const Outcome v = cli({"verify"});
    CHECK(v.code == 0);
    CHECK(v.out.find("FAIL") == std::string::npos);
    CHECK(cli({}).code == 2);
    CHECK(cli({"--help"}).code == 0);
  }
}
