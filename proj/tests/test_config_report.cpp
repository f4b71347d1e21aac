#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "renorm/config.hpp"
#include "renorm/report.hpp"

using namespace renorm;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("reference instances parse with eager validation") {
  const InstanceConfig a = reference_instance_a();
  CHECK(a.alpha.str() == "(-1+1*sqrt(5))/2");
  CHECK(a.Q == 2);
  CHECK(a.d == 1);
  REQUIRE(a.phi.size() == 2);
  CHECK(a.phi[0] == Vec::of({1}));
  CHECK(a.phi[1] == Vec::of({-1}));
  CHECK(a.k_max == 40);
  CHECK(a.trials == 200'000);
  CHECK(a.seed == 20240817);
  CHECK(a.format == "csv");
  CHECK(a.caps.streaming == 12'000'000);
  CHECK(a.lattice.full_lattice);

  const InstanceConfig b = reference_instance_b();
  CHECK(b.Q == 3);
  CHECK(b.d == 2);
  CHECK(b.alpha.str() == "(-1+1*sqrt(2))/1");
  CHECK(b.lattice.full_lattice);
}

TEST_CASE("every configuration key is honored") {
  const InstanceConfig cfg = parse_config_text(
      "# full example\n"
      "alpha = (-1 + 1*sqrt(2)) / 1   # inline comment\n"
      "Q = 3\n"
      "phi = [[1,0], [0,1], [-1,-1]]\n"
      "k_max = 17\n"
      "trials = 5000\n"
      "seed = 99\n"
      "out = results/deep\n"
      "format = json\n"
      "cap_explicit_block = 1234\n"
      "cap_streaming = 5678\n"
      "cap_cf = 91\n"
      "cap_max_level = 64\n"
      "cap_period_extension = 32\n",
      "<t>");
  CHECK(cfg.k_max == 17);
  CHECK(cfg.trials == 5000);
  CHECK(cfg.seed == 99);
  CHECK(cfg.out_dir == "results/deep");
  CHECK(cfg.format == "json");
  CHECK(cfg.caps.explicit_block == 1234);
  CHECK(cfg.caps.streaming == 5678);
  CHECK(cfg.caps.cf == 91);
  CHECK(cfg.caps.max_level == 64);
  CHECK(cfg.caps.period_extension == 32);
  CHECK(cfg.origin == "<t>");
}

TEST_CASE("parse errors carry line numbers and context") {
  const std::string head = "alpha = (-1+1*sqrt(5))/2\nQ = 2\nphi = [[1],[-1]]\n";
  CHECK_THROWS_WITH(parse_config_text(head + "what is this", "<t>"),
                    ContainsSubstring("line 4") && ContainsSubstring("key = value"));
  CHECK_THROWS_WITH(parse_config_text(head + "bogus = 1", "<t>"),
                    ContainsSubstring("line 4") && ContainsSubstring("unknown key 'bogus'"));
  CHECK_THROWS_WITH(parse_config_text(head + "trials = soon", "<t>"),
                    ContainsSubstring("line 4") && ContainsSubstring("expects an integer"));
  CHECK_THROWS_WITH(parse_config_text(head + "format = yaml", "<t>"),
                    ContainsSubstring("line 4") && ContainsSubstring("csv or json"));
  CHECK_THROWS_WITH(parse_config_text(head + "k_max =\n", "<t>"),
                    ContainsSubstring("line 4") && ContainsSubstring("empty key or value"));
  CHECK_THROWS_WITH(parse_config_text("alpha = nonsense\n", "<t>"),
                    ContainsSubstring("line 1") && ContainsSubstring("alpha"));
  CHECK_THROWS_WITH(parse_config_text("phi = {\"a\": 1}\nalpha = (-1+1*sqrt(5))/2\nQ = 2\n", "<t>"),
                    ContainsSubstring("line 1") && ContainsSubstring("JSON array"));
}

TEST_CASE("structural validation failures name the origin") {
  CHECK_THROWS_WITH(parse_config_text("Q = 2\nphi = [[1],[-1]]\n", "<t>"),
                    ContainsSubstring("<t>") && ContainsSubstring("missing key 'alpha'"));
  CHECK_THROWS_WITH(parse_config_text("alpha = (-1+1*sqrt(5))/2\nphi = [[1],[-1]]\n", "<t>"),
                    ContainsSubstring("missing key 'Q'"));
  CHECK_THROWS_WITH(parse_config_text("alpha = (-1+1*sqrt(5))/2\nQ = 2\n", "<t>"),
                    ContainsSubstring("missing key 'phi'"));
  const std::string head = "alpha = (-1+1*sqrt(5))/2\n";
  CHECK_THROWS_WITH(parse_config_text(head + "Q = 3\nphi = [[1],[-1]]\n", "<t>"),
                    ContainsSubstring("exactly Q vectors"));
  CHECK_THROWS_WITH(parse_config_text(head + "Q = 2\nphi = [[1.5],[-1.5]]\n", "<t>"),
                    ContainsSubstring("integers"));
  CHECK_THROWS_WITH(parse_config_text(head + "Q = 2\nphi = [[1],[-1]]\ntrials = 0\n", "<t>"),
                    ContainsSubstring("trials"));
  CHECK_THROWS_WITH(parse_config_text(head + "Q = 2\nphi = [[1],[-1]]\ncap_cf = -3\n", "<t>"),
                    ContainsSubstring("caps must be positive"));
  // Semantic validation: rationality, centering, range.
  CHECK_THROWS_WITH(parse_config_text("alpha = 1/2\nQ = 2\nphi = [[1],[-1]]\n", "<t>"),
                    ContainsSubstring("quadratic irrational"));
  CHECK_THROWS_AS(parse_config_text("alpha = (-1+1*sqrt(5))/2\nQ = 2\nphi = [[1],[1]]\n", "<t>"),
                  config_error);
  CHECK_THROWS_AS(parse_config_text("alpha = (3+1*sqrt(5))/2\nQ = 2\nphi = [[1],[-1]]\n", "<t>"),
                  config_error);
  CHECK_THROWS_WITH(parse_config("/no/such/file.cfg"), ContainsSubstring("cannot open"));
}

TEST_CASE("tables serialize to stable bytes") {
  Table t;
  t.columns = {"k", "value"};
  t.add_meta("alpha", "(-1+1*sqrt(5))/2");
  t.add_meta("n", "12");
  t.add_row({"1", "0.5"});
  t.add_row({"2", "-3"});
  CHECK(t.csv() ==
        "# alpha=(-1+1*sqrt(5))/2\n"
        "# n=12\n"
        "k,value\n"
        "1,0.5\n"
        "2,-3\n");
  const Json j = t.json();
  CHECK(j["meta"]["alpha"] == "(-1+1*sqrt(5))/2");
  CHECK(j["columns"] == Json::array({"k", "value"}));
  CHECK(j["rows"][1] == Json::array({"2", "-3"}));
  CHECK_THROWS_AS(t.add_row({"only-one-cell"}), internal_error);
}

TEST_CASE("table save writes the requested format") {
  const auto dir = std::filesystem::temp_directory_path() / "renorm_report_test";
  std::filesystem::remove_all(dir);
  Table t;
  t.columns = {"x"};
  t.add_row({"7"});
  const std::string cpath = t.save(dir.string(), "tiny", "csv");
  CHECK(cpath == (dir / "tiny.csv").string());
  std::ifstream in(cpath);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body == "x\n7\n");
  const std::string jpath = t.save(dir.string(), "tiny", "json");
  CHECK(std::filesystem::exists(jpath));
  CHECK_THROWS_AS(t.save(dir.string(), "tiny", "yaml"), config_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scalar formatting is exact and round-trippable") {
  CHECK(fmt_double(1.0) == "1");
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(fmt_double(2.0 / 3.0)) == 2.0 / 3.0);
  CHECK(fmt_int(BigInt("123456789012345678901234567890")) ==
        "123456789012345678901234567890");
  CHECK(fmt_rat(BigRat(-3, 6)) == "-1/2");
  CHECK(fmt_rat(BigRat(BigInt("610"), BigInt("1597"))) == "610/1597");
  CHECK(fmt_surd(Surd(-1, 1, 2, 5)) == "(-1+1*sqrt(5))/2");
}

TEST_CASE("plot data uses one x-y pair per line") {
  CHECK(plot_xy({{1.0, 2.0}, {3.5, -0.25}}, "band") ==
        "# band\n"
        "1 2\n"
        "3.5 -0.25\n");
  CHECK(plot_xy({}, "") == "");
}

TEST_CASE("nested directories are created on demand") {
  const auto dir = std::filesystem::temp_directory_path() / "renorm_deep_test";
  std::filesystem::remove_all(dir);
  const std::string path = (dir / "a" / "b" / "c.json").string();
  save_json(path, Json{{"ok", true}});
  std::ifstream in(path);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body == "{\n  \"ok\": true\n}\n");
  std::filesystem::remove_all(dir);
}
