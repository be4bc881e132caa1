#include "crdrn/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "crdrn/errors.hpp"

namespace crdrn {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(trim(item)));
    } catch (const std::exception&) {
      throw ConfigError(key, "not a number: " + trim(item));
    }
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "not an integer: " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: " + value);
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");

    if (key == "channels") cfg.channels = static_cast<int>(parse_int(key, value));
    else if (key == "cr_count") cfg.cr_count = static_cast<int>(parse_int(key, value));
    else if (key == "pr_count") cfg.pr_count = static_cast<int>(parse_int(key, value));
    else if (key == "cmr_count") cfg.cmr_count = static_cast<int>(parse_int(key, value));
    else if (key == "area_width") cfg.area_width = parse_double(key, value);
    else if (key == "area_height") cfg.area_height = parse_double(key, value);
    else if (key == "cr_range") cfg.cr_range = parse_double(key, value);
    else if (key == "pr_range") cfg.pr_range = parse_double(key, value);
    else if (key == "cmr_range") cfg.cmr_range = parse_double(key, value);
    else if (key == "portal_range") cfg.portal_range = parse_double(key, value);
    else if (key == "cr_radios") cfg.cr_radios = static_cast<int>(parse_int(key, value));
    else if (key == "cmr_radios") cfg.cmr_radios = static_cast<int>(parse_int(key, value));
    else if (key == "occupancy_prob") cfg.occupancy_prob = parse_double_list(key, value);
    else if (key == "strategy") {
      try {
        cfg.strategy = strategy_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "mode") {
      try {
        cfg.mode = sim_mode_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "cmr_map_mode") {
      try {
        cfg.cmr_map_mode = map_mode_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "ttl_init") cfg.ttl_init = static_cast<int>(parse_int(key, value));
    else if (key == "slots") cfg.slots = parse_int(key, value);
    else if (key == "warmup_slots") cfg.warmup_slots = static_cast<int>(parse_int(key, value));
    else if (key == "messages") cfg.messages = static_cast<int>(parse_int(key, value));
    else if (key == "inject_interval")
      cfg.inject_interval = static_cast<int>(parse_int(key, value));
    else if (key == "pr_data_rate") cfg.pr_data_rate = parse_double(key, value);
    else if (key == "beacon_period") cfg.beacon_period = static_cast<int>(parse_int(key, value));
    else if (key == "scan_dwell") cfg.scan_dwell = static_cast<int>(parse_int(key, value));
    else if (key == "sense_window") cfg.sense_window = static_cast<int>(parse_int(key, value));
    else if (key == "busy_threshold") cfg.busy_threshold = parse_double(key, value);
    else if (key == "assign_period") cfg.assign_period = static_cast<int>(parse_int(key, value));
    else if (key == "holdoff_max") cfg.holdoff_max = static_cast<int>(parse_int(key, value));
    else if (key == "queue_cap") cfg.queue_cap = static_cast<int>(parse_int(key, value));
    else if (key == "mobile_crs") cfg.mobile_crs = parse_int(key, value) != 0;
    else if (key == "cr_speed") cfg.cr_speed = parse_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "replications") cfg.replications = static_cast<int>(parse_int(key, value));
    else throw ConfigError(key, "unknown key");
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  char buf[96];
  auto put_d = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.6f\n", key, v);
    out << buf;
  };
  out << "# spectrum\n";
  out << "channels = " << cfg.channels << "\n";
  out << "occupancy_prob = ";
  for (size_t i = 0; i < cfg.occupancy_prob.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6f", i ? "," : "", cfg.occupancy_prob[i]);
    out << buf;
  }
  out << "\n";
  out << "# topology\n";
  out << "cr_count = " << cfg.cr_count << "\n";
  out << "pr_count = " << cfg.pr_count << "\n";
  out << "cmr_count = " << cfg.cmr_count << "\n";
  put_d("area_width", cfg.area_width);
  put_d("area_height", cfg.area_height);
  put_d("cr_range", cfg.cr_range);
  put_d("pr_range", cfg.pr_range);
  put_d("cmr_range", cfg.cmr_range);
  put_d("portal_range", cfg.portal_range);
  out << "cr_radios = " << cfg.cr_radios << "\n";
  out << "cmr_radios = " << cfg.cmr_radios << "\n";
  out << "mobile_crs = " << (cfg.mobile_crs ? 1 : 0) << "\n";
  put_d("cr_speed", cfg.cr_speed);
  out << "# protocol\n";
  out << "strategy = " << to_string(cfg.strategy) << "\n";
  out << "mode = " << to_string(cfg.mode) << "\n";
  out << "cmr_map_mode = " << to_string(cfg.cmr_map_mode) << "\n";
  out << "ttl_init = " << cfg.ttl_init << "\n";
  out << "beacon_period = " << cfg.beacon_period << "\n";
  out << "scan_dwell = " << cfg.scan_dwell << "\n";
  out << "sense_window = " << cfg.sense_window << "\n";
  put_d("busy_threshold", cfg.busy_threshold);
  out << "assign_period = " << cfg.assign_period << "\n";
  out << "holdoff_max = " << cfg.holdoff_max << "\n";
  out << "queue_cap = " << cfg.queue_cap << "\n";
  out << "# experiment\n";
  out << "slots = " << cfg.slots << "\n";
  out << "warmup_slots = " << cfg.warmup_slots << "\n";
  out << "messages = " << cfg.messages << "\n";
  out << "inject_interval = " << cfg.inject_interval << "\n";
  put_d("pr_data_rate", cfg.pr_data_rate);
  out << "seed = " << cfg.seed << "\n";
  out << "replications = " << cfg.replications << "\n";
  return out.str();
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_file_atomic(const std::string& path, std::string_view content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

}  // namespace crdrn
