#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "rbv/harness/commands.hpp"
#include "rbv/harness/runner.hpp"

using namespace rbv;
using namespace rbv::harness;
using Catch::Approx;

namespace {

json config_file(const std::string& name) {
  const char* dir = std::getenv("RBV_CONFIG_DIR");
  const std::string base = dir ? dir : "configs";
  return load_json_file(base + "/" + name);
}

std::vector<ReportRow> rows_named(const Report& r, const std::string& quantity) {
  std::vector<ReportRow> out;
  for (const auto& row : r.rows)
    if (row.quantity == quantity) out.push_back(row);
  return out;
}

json line_grid(double lo, double hi, double h) { return {{"dim", 1}, {"lower", {lo}}, {"upper", {hi}}, {"h", h}}; }

json wrap(json experiment) { return {{"seed", 5}, {"experiments", json::array({std::move(experiment)})}}; }

std::string config_error_message(const json& cfg) {
  try {
    run_config(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    return e.what();
  }
  FAIL("expected ConfigError");
  return {};
}

}  // namespace

TEST_CASE("minimal config passes", "[harness]") {
  const auto r = run_config(config_file("minimal.json"));
  REQUIRE_FALSE(r.rows.empty());
  CHECK_FALSE(r.has_failure());
  const auto check = rows_named(r, "variation_vs_expected");
  REQUIRE(check.size() == 1);
  CHECK(check[0].status == Status::pass);
  CHECK(check[0].experiment == "linear_p2");
  CHECK(r.metadata.seed == 1);
  CHECK(r.metadata.version == version);
  for (const auto& row : r.rows) CHECK(row.runtime_ms == 0.0);
}

TEST_CASE("empty experiment list", "[harness]") {
  const auto r = run_config(config_file("empty.json"));
  CHECK(r.rows.empty());
  CHECK(to_csv(r) == "experiment,quantity,params,value,tolerance,status,runtime_ms\n");
  CHECK(to_json(r)["rows"].empty());
}

TEST_CASE("config errors name the offending path", "[harness]") {
  const auto bad = config_error_message(config_file("bad_catalog.json"));
  CHECK(bad.find("experiments[0].function.catalog") != std::string::npos);
  CHECK(bad.find("no_such_family") != std::string::npos);

  const auto type = config_error_message(wrap({{"type", "no_such_type"}}));
  CHECK(type.find("experiments[0].type") != std::string::npos);

  const auto missing = config_error_message(wrap({{"type", "sobolev"}, {"function", {{"catalog", "linear"}}}}));
  CHECK(missing.find("experiments[0].grid") != std::string::npos);

  json wrong_kind = wrap({{"type", "sobolev"}, {"grid", line_grid(0, 1, 0.125)}, {"function", {{"catalog", "power_weight"}}}});
  CHECK(config_error_message(wrong_kind).find("weight") != std::string::npos);

  CHECK(config_error_message(json::array()).find("<root>") != std::string::npos);
  CHECK(config_error_message({{"seed", -3}, {"experiments", json::array()}}).find("seed") != std::string::npos);
  CHECK_THROWS_AS(parse_json_text("{ nope", "inline"), Error);
}

TEST_CASE("module errors become a failing error row", "[harness]") {
  // radii below 2h have no candidates.
  json e{{"id", "tiny"},
         {"type", "riesz_variation"},
         {"grid", line_grid(0, 1, 0.125)},
         {"function", {{"catalog", "linear"}}},
         {"radii", {4.0}}};
  json cfg{{"experiments", {e, {{"type", "sobolev"}, {"grid", line_grid(0, 1, 0.125)}, {"function", {{"catalog", "linear"}}}}}}};
  const auto r = run_config(cfg);
  REQUIRE_FALSE(r.rows.empty());
  CHECK(r.rows[0].experiment == "tiny");
  CHECK(r.rows[0].quantity == "error");
  CHECK(r.rows[0].status == Status::fail);
  CHECK(r.has_failure());
  // Later experiments still run; default ids are type_index.
  CHECK(r.rows.back().experiment == "sobolev_1");
}

TEST_CASE("seed override and config hash", "[harness]") {
  const auto cfg = config_file("minimal.json");
  const auto a = run_config(cfg);
  const auto b = run_config(cfg, RunOptions{77});
  CHECK(b.metadata.seed == 77);
  CHECK(a.metadata.config_hash != b.metadata.config_hash);
  CHECK(run_config(cfg).metadata.config_hash == a.metadata.config_hash);
  CHECK(a.metadata.config_hash.size() == 16);
  // Key order does not matter.
  CHECK(config_hash(json::parse(R"({"a":1,"b":[2,3]})")) == config_hash(json::parse(R"({"b":[2,3],"a":1})")));
}

TEST_CASE("report serialisation round trip", "[harness][report]") {
  Report r;
  r.metadata = {"9.9", "00ff", 12};
  r.rows.push_back({"e,1", "q\"x", "p=0.1;h=1e-3", 1.0 / 3.0, 0.05, Status::pass, 2.5});
  r.rows.push_back({"e2", "inf", "", std::numeric_limits<double>::infinity(), 0.0, Status::fail, 0.0});
  r.rows.push_back({"e2", "nan", "", std::numeric_limits<double>::quiet_NaN(), 0.0, Status::info, 0.0});
  const auto back = report_from_json(json::parse(to_json(r).dump()));
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[0] == r.rows[0]);
  CHECK(back.rows[1] == r.rows[1]);
  CHECK(std::isnan(back.rows[2].value));
  CHECK(back.metadata == r.metadata);

  const auto csv = to_csv(r);
  CHECK(csv.find("\"e,1\",\"q\"\"x\"") != std::string::npos);
  CHECK(csv.find("0.3333333333333333") != std::string::npos);
  CHECK_THROWS_AS(report_from_json(json::parse(R"({"rows":[]})")), Error);

  Report one;
  one.rows.push_back({"a", "b", "", 1, 0, Status::info, 0});
  const auto text = to_csv(one);
  CHECK(text.substr(0, text.find('\n')) == "experiment,quantity,params,value,tolerance,status,runtime_ms");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);

  try {
    emit_report(one, ReportFormat::csv, "/nonexistent-dir/report.csv");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }
  const auto tmp = std::filesystem::temp_directory_path() / "rbv_report_test.json";
  emit_report(r, ReportFormat::json, tmp.string());
  CHECK(report_from_json(load_json_file(tmp.string())).rows[0] == r.rows[0]);
  std::filesystem::remove(tmp);
}

TEST_CASE("variation_vs_gradient suite", "[harness][variation_vs_gradient]") {
  json lin{{"type", "variation_vs_gradient"},
           {"grid", line_grid(0, 1, 1.0 / 256)},
           {"function", {{"catalog", "linear"}}},
           {"ps", {2}},
           {"radii", {{"dyadic", {3, 7}}}},
           {"levels", 2},
           {"rw", 1.0},
           {"expected_ratio", 2.0}};
  const auto r = run_config(wrap(lin));
  CHECK_FALSE(r.has_failure());
  const auto ratio = rows_named(r, "variation_over_grad");
  REQUIRE(ratio.size() == 2);
  // Variation -> 2 while the gradient norm is 1.
  CHECK(ratio.back().value == Approx(2.0).epsilon(0.05));

  json flat = lin;
  flat["function"] = {{"catalog", "constant"}};
  flat.erase("expected_ratio");
  const auto z = run_config(wrap(flat));
  CHECK(rows_named(z, "both_zero").size() == 2);
  CHECK(rows_named(z, "ratios_bounded").empty());

  // grad_norm oracle: int_0^1 (2x)^4 x^(1/2) dx = 32/11.
  json sq{{"type", "variation_vs_gradient"},
          {"grid", line_grid(0, 1, 1.0 / 256)},
          {"function", {{"catalog", "power"}, {"params", {{"beta", 2}}}}},
          {"weight", {{"catalog", "power_weight"}, {"params", {{"alpha", 0.5}}}}},
          {"ps", {4}},
          {"radii", {{"dyadic", {3, 7}}}},
          {"rw", 1.5}};
  const auto s = run_config(wrap(sq));
  const auto grad = rows_named(s, "grad_norm");
  REQUIRE(grad.size() == 1);
  CHECK(grad[0].value == Approx(std::pow(32.0 / 11.0, 0.25)).epsilon(0.01));
  for (const auto& row : rows_named(s, "variation_over_grad")) CHECK(std::isfinite(row.value));
  CHECK(rows_named(s, "ratios_bounded").at(0).status == Status::pass);

  json pre = sq;
  pre["rw"] = 5.0;
  CHECK(rows_named(run_config(wrap(pre)), "error").size() == 1);
  json left = pre;
  left["suite"] = "left_only";
  const auto l = run_config(wrap(left));
  CHECK(rows_named(l, "error").empty());
  CHECK(rows_named(l, "variation_over_grad").empty());
}

TEST_CASE("ap_subset has no violations", "[harness][ap_subset]") {
  json e{{"type", "ap_subset"},
         {"grid", line_grid(-1, 1, 1.0 / 128)},
         {"p", 2},
         {"trials", 200},
         {"family", {{"min_side", 0.125}, {"levels", 4}, {"shifts", 2}}},
         {"weights",
          {{{"catalog", "constant_weight"}},
           {{"catalog", "power_weight"}, {"params", {{"alpha", 0.5}}}},
           {{"catalog", "step_weight"}, {"params", {{"jump", 3}}}}}}};
  const auto r = run_config(wrap(e));
  const auto v = rows_named(r, "violations");
  REQUIRE(v.size() == 3);
  for (const auto& row : v) {
    CHECK(row.value == 0.0);
    CHECK(row.status == Status::pass);
  }
  for (const auto& row : rows_named(r, "min_margin")) CHECK(row.value >= 0.0);
  // Same seed, same rows.
  CHECK(run_config(wrap(e)).rows == r.rows);
}

TEST_CASE("reproducible config is deterministic", "[harness]") {
  const auto cfg = config_file("reproducible.json");
  const auto a = run_config(cfg);
  CHECK(a.rows == run_config(cfg).rows);
  CHECK(rows_named(a, "error").empty());
}

TEST_CASE("optimizer_soundness", "[harness][packing]") {
  const auto r = run_config(wrap({{"type", "optimizer_soundness"}, {"sets", 60}, {"max_size", 12}}));
  const auto mm = rows_named(r, "dp_bruteforce_mismatches");
  REQUIRE(mm.size() == 1);
  CHECK(mm[0].value == 0.0);
  CHECK(rows_named(r, "local_search_min_ratio").at(0).value <= 1.0);
  CHECK_THROWS_AS(run_config(wrap({{"type", "optimizer_soundness"}, {"max_size", 21}})), Error);
}

TEST_CASE("single-experiment commands", "[harness][cli]") {
  const json cfg = config_file("sobolev.json");
  const auto s = sobolev_command(single_experiment(cfg));
  CHECK(s.contains("lp"));
  CHECK(s.contains("grad_lp"));

  json two{{"experiments", {config_file("minimal.json")["experiments"][0], config_file("minimal.json")["experiments"][0]}}};
  CHECK_THROWS_AS(single_experiment(two), Error);

  const json lin = config_file("minimal.json");
  const auto rv = riesz_var_command(single_experiment(lin));
  CHECK(rv["variation"].get<double>() == Approx(2.0).epsilon(0.05));
  CHECK(rv["n_balls"].get<std::size_t>() == rv["balls"].size());

  const auto w = weights_command(single_experiment(config_file("weights.json")));
  REQUIRE_FALSE(w.empty());
  const auto csv = render_weights(w, ReportFormat::csv);
  CHECK(csv.substr(0, csv.find('\n')) == "quantity,p_or_s,family,levels,value");

  const auto cat = catalog_text(ReportFormat::csv);
  for (const char* name : {"linear", "hat", "power_weight", "step_weight"}) CHECK(cat.find(name) != std::string::npos);
}
