#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace spectraflow {

// Flat "key = value" text with [section] headers; a key inside [model] is
// stored as "model.key". '#' starts a comment, blank lines are skipped,
// later duplicates win.
struct Config {
	std::map<std::string, std::string> values;
	std::string path;

	bool has(const std::string& key) const;
	const std::string& get(const std::string& key) const;
	std::string get(const std::string& key, const std::string& fallback) const;
	double number(const std::string& key) const;
	double number(const std::string& key, double fallback) const;
	long integer(const std::string& key) const;
	long integer(const std::string& key, long fallback) const;
	bool flag(const std::string& key, bool fallback) const;
	// comma or whitespace separated numbers
	std::vector<double> list(const std::string& key) const;
	std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
};

Config parse_config(std::istream& in);
Config load_config(const std::string& path);

struct CsvTable {
	std::string name;  // file stem suffix
	std::vector<std::string> header;
	std::vector<std::vector<double>> rows;
};

struct Verdict {
	std::string check;
	bool pass = false;
	double value = 0.0;
	double threshold = 0.0;
};

struct RunRecord {
	std::string experiment;
	std::vector<CsvTable> tables;
	std::vector<Verdict> verdicts;
	std::vector<std::pair<std::string, std::string>> metadata;  // config echo etc
	double elapsed_seconds = 0.0;

	bool all_pass() const;
	const Verdict* find(const std::string& check) const;
};

const std::vector<std::string>& experiment_names();

// static diagnostics: grid sanity, model compatibility, the 16 (2^L)^2 bytes
// per dense matrix memory estimate against [limits] memory_bytes
std::vector<std::string> validate_config(const Config& cfg);

// executes the named experiment; throws std::invalid_argument on bad configs
// and GapClosed when a tracked gap dips below gamma_min
RunRecord run_experiment(const Config& cfg);

// <outdir>/<experiment>-<table>.csv plus <outdir>/summary.txt; the summary
// ends with a timing block, everything above it is deterministic
void write_record(const RunRecord& rec, const std::string& outdir);

// run | validate | list-experiments; exit 0 pass, 1 verdict failure,
// 2 usage or config error, 3 gap closed
int cli_main(int argc, char** argv);

// worker count for embarrassingly parallel sweeps: config [run] workers,
// else the SPECTRAFLOW_WORKERS environment variable, else 1
int worker_count(const Config& cfg);
void parallel_for(int workers, int n, const std::function<void(int)>& body);

}
