// Batch experiment runner: reads a key=value spec, fans trials out over
// worker threads, and writes deterministic CSV or a validation report.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aircomp/system_config.hpp"

namespace aircomp {

struct ExperimentSpec {
  std::string kind = "mse_sweep";  // mse_sweep|latency_sweep|train|beamform|validate
  std::string sweep_var = "snr_db";  // snr_db | nt | k
  std::vector<double> grid;
  int trials = 100;
  std::vector<std::string> schemes;
  SystemConfig sys;
  std::uint64_t seed = 0;
  std::string out_path;  // empty: stdout
  int threads = 1;

  // train settings
  std::string task_kind = "quadratic_consensus";
  bool heterogeneous = false;
  int rounds = 200;
  double beta = 0.5;
  bool stochastic_gradients = true;
  int record_every = 1;

  // validate settings
  bool inject_eta_bug = false;  // scales eta by 1.1 in the simulated rx path

  void validate() const;
};

// Parses the experiment.* / sweep.* / train.* keys next to the system keys.
// Missing keys keep the defaults above; kind-specific grid and scheme
// defaults are filled in.
ExperimentSpec experiment_spec_from(const KeyValueFile& kv);

// Canonical serialization of the effective settings; its config_hash stamps
// every CSV row, so identical specs hash identically no matter where they
// were built.
KeyValueFile to_key_values(const ExperimentSpec& spec);
std::uint64_t spec_hash(const ExperimentSpec& spec);

// %.12g rendering shared by all CSV output, and RFC-4180 quoting for the
// rare field that needs it.
std::string csv_number(double v);
std::string csv_field(const std::string& s);

// Average analytic aggregation error per scheme across channel draws, swept
// over SNR, antenna count, or device count.  Infeasible grid points produce
// rows with the skipped flag set.
void cmd_mse_sweep(const ExperimentSpec& spec, std::ostream& out);

// Per-round latency of each transport versus device count.
void cmd_latency_sweep(const ExperimentSpec& spec, std::ostream& out);

// Full optimizer runs, one block of trace rows per aggregator.
void cmd_train(const ExperimentSpec& spec, std::ostream& out);

// Single-instance beamforming designs with analytic and simulated error and
// solver diagnostics.
void cmd_beamform(const ExperimentSpec& spec, std::ostream& out);

// Deterministic self-check suite; returns 0 when every check passes.
int cmd_validate(const ExperimentSpec& spec, std::ostream& out);

// Dispatch by spec.kind; returns the command's exit status.
int run_experiment(const ExperimentSpec& spec, std::ostream& out);

}  // namespace aircomp
