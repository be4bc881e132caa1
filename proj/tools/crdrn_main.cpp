#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crdrn/config_io.hpp"
#include "crdrn/engine.hpp"
#include "crdrn/errors.hpp"
#include "crdrn/replay.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct Overrides {
  std::optional<int> channels, cmr_count, cr_count, replications, ttl;
  std::optional<std::string> strategy, mode;
  std::optional<std::uint64_t> seed;
};

crdrn::ExperimentConfig assemble_config(const std::string& config_path, const Overrides& ov) {
  crdrn::ExperimentConfig cfg;
  bool seed_from_file = false;
  if (!config_path.empty()) {
    std::string text;
    {
      std::ifstream in(config_path);
      if (!in) throw std::ios_base::failure("cannot open config file: " + config_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    cfg = crdrn::parse_config(text);
    seed_from_file = text.find("seed") != std::string::npos;
  }
  if (ov.channels) cfg.channels = *ov.channels;
  if (ov.cmr_count) cfg.cmr_count = *ov.cmr_count;
  if (ov.cr_count) cfg.cr_count = *ov.cr_count;
  if (ov.replications) cfg.replications = *ov.replications;
  if (ov.ttl) cfg.ttl_init = *ov.ttl;
  if (ov.strategy) cfg.strategy = crdrn::strategy_from_string(*ov.strategy);
  if (ov.mode) cfg.mode = crdrn::sim_mode_from_string(*ov.mode);
  if (ov.seed) {
    cfg.seed = *ov.seed;
  } else if (!seed_from_file) {
    // Last-resort seed override from the environment.
    if (const char* env = std::getenv("CRDRN_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
  }
  crdrn::validate(cfg);
  return cfg;
}

std::vector<double> parse_values(const std::string& spec) {
  // "1:10" inclusive range or "5,15" list.
  std::vector<double> out;
  size_t colon = spec.find(':');
  if (colon != std::string::npos) {
    double lo = std::stod(spec.substr(0, colon));
    double hi = std::stod(spec.substr(colon + 1));
    for (double v = lo; v <= hi; v += 1.0) out.push_back(v);
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

void write_outputs(const std::string& out_dir, const std::vector<crdrn::SweepRow>& rows,
                   const crdrn::ExperimentConfig& cfg, const std::string& csv_name) {
  std::filesystem::create_directories(out_dir);
  crdrn::write_file_atomic(out_dir + "/" + csv_name, crdrn::metrics_csv(rows));

  // Deployment and event log of replication 0 for replay and debugging.
  crdrn::ExperimentConfig c0 = cfg;
  c0.seed = crdrn::replication_seed(cfg.seed, 0);
  crdrn::Deployment d = crdrn::deploy_random(crdrn::deployment_config(c0));
  crdrn::SimWorld world(d, crdrn::expanded_occupancy(c0), crdrn::sim_options(c0));
  world.set_message_pipeline(c0.messages, c0.inject_interval);
  world.run_until_done(c0.slots);
  crdrn::write_file_atomic(out_dir + "/deployment.txt", crdrn::serialize(d));
  crdrn::write_file_atomic(out_dir + "/events.log", world.log_text());
}

int cmd_run(const std::string& config_path, const Overrides& ov, const std::string& out_dir) {
  crdrn::ExperimentConfig cfg = assemble_config(config_path, ov);
  std::vector<crdrn::SweepRow> rows(1);
  rows[0].axis = "none";
  rows[0].value = 0;
  rows[0].strategy = cfg.strategy;
  rows[0].channels = cfg.channels;
  rows[0].replications = cfg.replications;
  rows[0].metrics = crdrn::run(cfg);
  write_outputs(out_dir, rows, cfg, "metrics.csv");
  auto nb = rows[0].metrics.cmr_neighbor();
  std::cout << "delivery ratio to CMR one-hop neighborhood: " << nb.mean << " (sd " << nb.sd
            << ") over " << cfg.replications << " replications\n"
            << "outputs in " << out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const Overrides& ov, const std::string& axis,
              const std::string& values_spec, const std::string& out_dir) {
  crdrn::ExperimentConfig cfg = assemble_config(config_path, ov);
  std::vector<double> values = parse_values(values_spec);
  if (values.empty()) throw crdrn::ConfigError("values", "empty value list");
  std::vector<crdrn::SweepRow> rows = crdrn::sweep(cfg, axis, values);
  write_outputs(out_dir, rows, cfg, "sweep.csv");
  std::cout << "wrote " << rows.size() << " rows to " << out_dir << "/sweep.csv\n";
  return kExitOk;
}

int cmd_validate(const std::string& config_path, const Overrides& ov) {
  crdrn::ExperimentConfig cfg = assemble_config(config_path, ov);
  std::cout << crdrn::serialize_config(cfg);
  return kExitOk;
}

int cmd_replay(const std::string& deployment_path, const std::string& log_path) {
  std::ifstream din(deployment_path);
  if (!din) throw std::ios_base::failure("cannot open deployment file: " + deployment_path);
  std::ostringstream dss;
  dss << din.rdbuf();
  std::ifstream lin(log_path);
  if (!lin) throw std::ios_base::failure("cannot open log file: " + log_path);
  std::ostringstream lss;
  lss << lin.rdbuf();

  crdrn::Deployment d = crdrn::parse_deployment(dss.str());
  crdrn::ReplayReport report = crdrn::replay_verify(d, lss.str());
  for (const std::string& v : report.violations) std::cout << "VIOLATION " << v << "\n";
  std::cout << "injected " << report.injected << "\n"
            << "delivery_cmr_neighbor " << report.ratio_cmr_neighbor << "\n"
            << "delivery_cmr " << report.ratio_cmr << "\n"
            << "delivery_portal " << report.ratio_portal << "\n"
            << "collision_drops " << report.collision_drops << "\n"
            << (report.ok() ? "OK: no violations\n" : "FAILED\n");
  return report.ok() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crdrn: cognitive-radio disaster-response network simulator"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path, out_dir = "out", axis, values_spec = "1:10";
  std::string deployment_path, log_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--channels", ov.channels, "override channel count");
    cmd->add_option("--strategy", ov.strategy, "override strategy: surf | rd");
    cmd->add_option("--cmr-count", ov.cmr_count, "override CMR count");
    cmd->add_option("--cr-count", ov.cr_count, "override CR count");
    cmd->add_option("--seed", ov.seed, "override master seed");
    cmd->add_option("--replications", ov.replications, "override replication count");
    cmd->add_option("--ttl", ov.ttl, "override initial TTL");
    cmd->add_option("--mode", ov.mode, "override mode: multi_hop | single_hop");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment, write metrics.csv");
  add_common(run_cmd);
  run_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run one row per axis value, write sweep.csv");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "config field to vary")->required();
  sweep_cmd->add_option("--values", values_spec, "lo:hi range or comma list");
  sweep_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a config and echo canonical form");
  add_common(validate_cmd);

  CLI::App* replay_cmd = app.add_subcommand("replay", "verify an event log against a deployment");
  replay_cmd->add_option("--deployment", deployment_path, "deployment file")->required();
  replay_cmd->add_option("--log", log_path, "event log file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, ov, out_dir);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, ov, axis, values_spec, out_dir);
    if (validate_cmd->parsed()) return cmd_validate(config_path, ov);
    if (replay_cmd->parsed()) return cmd_replay(deployment_path, log_path);
  } catch (const crdrn::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const crdrn::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::runtime_error& e) {
    // File-system level failures from atomic writes and loads.
    std::string what = e.what();
    bool io = what.find("file") != std::string::npos || what.find("rename") != std::string::npos;
    std::cerr << (io ? "I/O error: " : "error: ") << what << "\n";
    return io ? kExitIo : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
