#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "spectraflow/experiment.hpp"

using namespace spectraflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
	static fs::path dir = [] {
		auto p = fs::temp_directory_path() /
		         ("spectraflow-test-" + std::to_string(::getpid()));
		fs::create_directories(p);
		return p;
	}();
	return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
	const fs::path p = scratch_dir() / name;
	std::ofstream out(p);
	out << body;
	return p;
}

int run_cli(std::vector<std::string> args) {
	args.insert(args.begin(), "spectraflow");
	std::vector<char*> argv;
	for (auto& a : args) argv.push_back(a.data());
	return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing handles sections, comments and overrides") {
	std::istringstream in(
	    "experiment = kernel-constants  # trailing comment\n"
	    "\n"
	    "[model]\n"
	    "name = tfim\n"
	    "L = 8\n"
	    "L = 10\n"
	    "[flow]\n"
	    "gamma = 1.25\n"
	    "s_grid = 0.0, 0.5, 1.0\n"
	    "blocked = yes\n");
	Config cfg = parse_config(in);
	CHECK(cfg.get("experiment") == "kernel-constants");
	CHECK(cfg.get("model.name") == "tfim");
	CHECK(cfg.integer("model.L") == 10);  // later duplicates win
	CHECK(cfg.number("flow.gamma") == doctest::Approx(1.25));
	CHECK(cfg.flag("flow.blocked", false));
	CHECK(cfg.list("flow.s_grid") == std::vector<double>{0.0, 0.5, 1.0});
	CHECK(cfg.get("missing", "fallback") == "fallback");
	CHECK(cfg.number("missing", 2.5) == 2.5);
	CHECK_THROWS_AS(cfg.get("missing"), std::invalid_argument);
	CHECK_THROWS_AS(cfg.number("model.name"), std::invalid_argument);
	CHECK_THROWS_AS(cfg.flag("model.name", false), std::invalid_argument);

	std::istringstream bad1("key value\n");
	CHECK_THROWS_AS(parse_config(bad1), std::invalid_argument);
	std::istringstream bad2("[model\nname = tfim\n");
	CHECK_THROWS_AS(parse_config(bad2), std::invalid_argument);
	CHECK_THROWS_AS(load_config((scratch_dir() / "absent.cfg").string()),
	                std::invalid_argument);
}

TEST_CASE("validation refuses oversized and ill-typed configs") {
	auto diags = [](const std::string& text) {
		std::istringstream in(text);
		return validate_config(parse_config(in));
	};

	CHECK(diags("experiment = nonsense\n").size() == 1);
	CHECK(!diags("experiment = flow-transport\n[model]\nname = heisenberg\n").empty());

	// the dense representation at L = 20 would need 16 TB
	const auto refusal = diags("experiment = flow-transport\n[model]\nL = 20\n");
	REQUIRE(!refusal.empty());
	CHECK(refusal.front().find("refusal") != std::string::npos);
	CHECK(refusal.front().find("20") != std::string::npos);

	CHECK(!diags("experiment = flow-transport\n[check]\nresidual_tolerance = -1\n").empty());
	CHECK(!diags("experiment = flow-transport\n[flow]\ns_grid = 1.0, 0.5\n").empty());
	CHECK(!diags("experiment = lppl-decay\n[model]\nname = tfim\n").empty());
	CHECK(!diags("experiment = lr-cone-alpha\n[flow]\ngamma = 1.2\n[alpha]\nb_sites =\n")
	           .empty());
	CHECK(!diags("experiment = psi-decay\n").empty());  // gamma required
	CHECK(!diags("experiment = symmetry-check\n[flow]\ngamma = 2.5\n").empty());
	CHECK(!diags("experiment = volume-convergence\n[flow]\ngamma = 1.2\n[volumes]\n"
	             "sizes = 4, 7\n[model]\nL = 8\n")
	           .empty());

	CHECK(diags("experiment = flow-transport\n[model]\nname = tfim\nL = 6\n"
	            "h0 = 1.5\nh1 = 2.5\n[flow]\ns_points = 21\n")
	          .empty());
}

TEST_CASE("experiments run deterministically and persist their tables") {
	std::istringstream in(
	    "experiment = flow-transport\n"
	    "[model]\nname = tfim\nL = 4\nh0 = 1.5\nh1 = 2.5\n"
	    "[flow]\ns_points = 21\n"
	    "[check]\noracle = false\norder = false\nresidual_tolerance = 1e-3\n");
	Config cfg = parse_config(in);
	REQUIRE(validate_config(cfg).empty());

	RunRecord a = run_experiment(cfg);
	RunRecord b = run_experiment(cfg);
	CHECK(a.all_pass());
	REQUIRE(a.tables.size() == 1);
	CHECK(a.tables[0].name == "transport");
	CHECK(a.tables[0].rows.size() == 21);
	REQUIRE(a.find("transport_residual") != nullptr);
	CHECK(a.find("transport_residual")->value > 0.0);
	CHECK(a.find("absent") == nullptr);

	// identical config, identical payload, timing aside
	REQUIRE(b.tables.size() == a.tables.size());
	CHECK(a.tables[0].rows == b.tables[0].rows);
	CHECK(a.verdicts.size() == b.verdicts.size());
	for (size_t i = 0; i < a.verdicts.size(); ++i) {
		CHECK(a.verdicts[i].check == b.verdicts[i].check);
		CHECK(a.verdicts[i].value == b.verdicts[i].value);
	}

	const fs::path out = scratch_dir() / "flow-run";
	write_record(a, out.string());
	CHECK(fs::exists(out / "flow-transport-transport.csv"));
	std::ifstream sum(out / "summary.txt");
	std::string text((std::istreambuf_iterator<char>(sum)), std::istreambuf_iterator<char>());
	CHECK(text.find("PASS transport_residual") != std::string::npos);
	CHECK(text.find("# timing") != std::string::npos);
	// everything above the timing block is reproducible
	CHECK(text.find("# timing") > text.find("PASS"));
}

TEST_CASE("symmetry experiment passes on a flip-even ring") {
	std::istringstream in(
	    "experiment = symmetry-check\n"
	    "[model]\nname = tfim\nboundary = periodic\nL = 4\nh0 = 2.5\nh1 = 3.5\n"
	    "[flow]\ngamma = 2.5\ns_points = 3\n");
	Config cfg = parse_config(in);
	REQUIRE(validate_config(cfg).empty());
	RunRecord rec = run_experiment(cfg);
	CHECK(rec.all_pass());
	REQUIRE(rec.find("translation_psi") != nullptr);
	CHECK(rec.find("translation_psi")->value <= 1e-9);
}

TEST_CASE("cli exit codes distinguish usage, verdicts and closed gaps") {
	CHECK(run_cli({"list-experiments"}) == 0);
	CHECK(run_cli({"run"}) == 2);                      // missing argument
	CHECK(run_cli({"run", "/no/such/file.cfg"}) == 2);

	const auto bad = write_config("bad.cfg", "experiment = flow-transport\n[model]\nL = 20\n");
	CHECK(run_cli({"validate", bad.string()}) == 2);
	CHECK(run_cli({"run", bad.string()}) == 2);

	const auto good = write_config(
	    "good.cfg",
	    "experiment = flow-transport\n[model]\nname = tfim\nL = 4\nh0 = 1.5\nh1 = 2.5\n"
	    "[flow]\ns_points = 21\n[check]\noracle = false\norder = false\n"
	    "residual_tolerance = 1e-3\n");
	CHECK(run_cli({"validate", good.string()}) == 0);
	CHECK(run_cli({"run", good.string(), "--out", (scratch_dir() / "cli-run").string()}) == 0);

	// a failed verdict is exit-code 1
	const auto tight = write_config(
	    "tight.cfg",
	    "experiment = flow-transport\n[model]\nname = tfim\nL = 4\nh0 = 1.5\nh1 = 2.5\n"
	    "[flow]\ns_points = 21\n[check]\noracle = false\norder = false\n"
	    "residual_tolerance = 1e-12\n");
	CHECK(run_cli({"run", tight.string(), "--out", (scratch_dir() / "cli-tight").string()}) == 1);

	// driving the path through the closing gap aborts with the hypothesis code
	const auto closed = write_config(
	    "closed.cfg",
	    "experiment = flow-transport\n[model]\nname = tfim\nL = 4\nh0 = 1.5\nh1 = 0.5\n"
	    "[flow]\ngamma = 0.45\ngamma_min = 0.5\ns_points = 9\n"
	    "[check]\noracle = false\norder = false\n");
	CHECK(run_cli({"run", closed.string(), "--out", (scratch_dir() / "cli-closed").string()}) ==
	      3);
}
