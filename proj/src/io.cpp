#include "sbq/io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sbq {

namespace {

[[noreturn]] void key_error(const std::string& key, const std::string& msg) {
  throw std::invalid_argument("config." + key + ": " + msg);
}

double parse_double(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &pos);
  } catch (const std::exception&) {
    key_error(key, "not a number: '" + value + "'");
  }
  if (pos != value.size()) key_error(key, "trailing characters in '" + value + "'");
  return x;
}

int parse_int(const std::string& key, const std::string& value) {
  size_t pos = 0;
  int x = 0;
  try {
    x = std::stoi(value, &pos);
  } catch (const std::exception&) {
    key_error(key, "not an integer: '" + value + "'");
  }
  if (pos != value.size()) key_error(key, "trailing characters in '" + value + "'");
  return x;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

ProtocolConfig parse_config_text(const std::string& text) {
  ProtocolConfig cfg;
  bool have_n = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "model") {
      if (value == "chain") cfg.model = ModelKind::Chain;
      else if (value == "fully-connected") cfg.model = ModelKind::FullyConnected;
      else key_error(key, "expected 'chain' or 'fully-connected'");
    } else if (key == "n_sites") {
      cfg.n_sites = parse_int(key, value);
      have_n = true;
    } else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "j") cfg.j = parse_double(key, value);
    else if (key == "h_c_reference") cfg.h_c_reference = parse_double(key, value);
    else if (key == "h1") cfg.h1 = parse_double(key, value);
    else if (key == "h2") cfg.h2 = parse_double(key, value);
    else if (key == "h3") cfg.h3 = parse_double(key, value);
    else if (key == "tau_q") cfg.tau_q = parse_double(key, value);
    else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
    else if (key == "p") cfg.p = parse_double(key, value);
    else if (key == "phi") cfg.phi = parse_double(key, value);
    else if (key == "t_max") cfg.t_max = parse_double(key, value);
    else if (key == "n_samples") cfg.n_samples = parse_int(key, value);
    else if (key == "n_tau_r") cfg.n_tau_r = parse_int(key, value);
    else if (key == "delta") cfg.delta = parse_double(key, value);
    else if (key == "time_unit") cfg.time_unit = parse_double(key, value);
    else if (key == "dense_threshold") cfg.dense_threshold = parse_int(key, value);
    else if (key == "in_place_cutoff") cfg.in_place_cutoff = parse_int(key, value);
    else key_error(key, "unknown key");
  }
  if (!have_n) key_error("n_sites", "missing required key");
  cfg.validate();
  return cfg;
}

ProtocolConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string config_text(const ProtocolConfig& c) {
  std::ostringstream out;
  out << "model = "
      << (c.model == ModelKind::Chain ? "chain" : "fully-connected") << "\n";
  out << "n_sites = " << c.n_sites << "\n";
  out << "alpha = " << format_number(c.alpha) << "\n";
  out << "j = " << format_number(c.j) << "\n";
  out << "h_c_reference = " << format_number(c.h_c_reference) << "\n";
  out << "h1 = " << format_number(c.h1) << "\n";
  out << "h2 = " << format_number(c.h2) << "\n";
  out << "h3 = " << format_number(c.h3) << "\n";
  out << "tau_q = " << format_number(c.tau_q) << "\n";
  out << "epsilon = " << format_number(c.epsilon) << "\n";
  out << "p = " << format_number(c.p) << "\n";
  out << "phi = " << format_number(c.phi) << "\n";
  out << "t_max = " << format_number(c.t_max) << "\n";
  out << "n_samples = " << c.n_samples << "\n";
  out << "n_tau_r = " << c.n_tau_r << "\n";
  out << "delta = " << format_number(c.delta) << "\n";
  out << "time_unit = " << format_number(c.time_unit) << "\n";
  out << "dense_threshold = " << c.dense_threshold << "\n";
  out << "in_place_cutoff = " << c.in_place_cutoff << "\n";
  return out.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string series_csv(const TimeSeries& series) {
  std::ostringstream out;
  out << "t";
  for (const auto& label : series.labels) out << ',' << label;
  out << '\n';
  for (size_t i = 0; i < series.times.size(); ++i) {
    out << format_number(series.times[i]);
    for (size_t l = 0; l < series.labels.size(); ++l)
      out << ',' << format_number(series.values[l][i]);
    out << '\n';
  }
  return out.str();
}

std::string histogram_csv(const MagnetizationHistogram& h) {
  std::ostringstream out;
  out << "m,mean_p,std_p\n";
  for (int i = 0; i < h.m_values.size(); ++i)
    out << format_number(h.m_values[i]) << ','
        << format_number(h.mean_probabilities[i]) << ','
        << format_number(h.std_probabilities[i]) << '\n';
  return out.str();
}

std::string gge_json(const ExperimentResult& r) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"beta\": " << format_number(r.gge.params.beta) << ",\n";
  out << "  \"lambda_pi\": " << format_number(r.gge.params.lambda_pi) << ",\n";
  out << "  \"lambda_c\": " << format_number(r.gge.params.lambda_c) << ",\n";
  out << "  \"lambda_k\": " << format_number(r.gge.params.lambda_k) << ",\n";
  out << "  \"delta\": " << format_number(r.gge.params.delta) << ",\n";
  out << "  \"log_z\": " << format_number(r.gge.log_z) << ",\n";
  out << "  \"targets\": {\n";
  out << "    \"pi\": " << format_number(r.targets.pi_target) << ",\n";
  out << "    \"c\": " << format_number(r.targets.c_target) << ",\n";
  out << "    \"k\": " << format_number(r.targets.k_target) << ",\n";
  out << "    \"energy\": " << format_number(r.targets.energy_target) << "\n";
  out << "  },\n";
  out << "  \"predictions\": {\n";
  out << "    \"E\": " << format_number(r.gge.energy) << ",\n";
  out << "    \"C\": " << format_number(r.gge.c) << ",\n";
  out << "    \"K\": " << format_number(r.gge.k) << ",\n";
  out << "    \"Pi\": " << format_number(r.gge.pi) << ",\n";
  out << "    \"M\": " << format_number(r.gge.m) << ",\n";
  out << "    \"W\": " << format_number(r.gge.w) << "\n";
  out << "  },\n";
  out << "  \"residuals\": {\n";
  out << "    \"energy\": " << format_number(r.gge.energy - r.targets.energy_target)
      << ",\n";
  out << "    \"pi\": " << format_number(r.gge.pi - r.targets.pi_target) << ",\n";
  out << "    \"c\": " << format_number(r.gge.c - r.targets.c_target) << ",\n";
  out << "    \"k\": " << format_number(r.gge.k - r.targets.k_target) << "\n";
  out << "  }\n";
  out << "}\n";
  return out.str();
}

std::vector<std::string> emit_results(const ExperimentResult& result,
                                      const ProtocolConfig& config,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  const auto t_start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());

  std::map<std::string, std::string> files;
  files["series.csv"] = series_csv(result.series);
  if (result.has_histogram) files["hist.csv"] = histogram_csv(result.histogram);
  if (result.has_gge) files["gge.json"] = gge_json(result);

  std::vector<std::string> written;
  auto write_file = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    written.push_back(path);
  };
  for (const auto& [name, body] : files) write_file(name, body);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  std::ostringstream man;
  man << "{\n";
  man << "  \"tool_version\": \"" << json_escape(kToolVersion) << "\",\n";
  man << "  \"wall_seconds\": " << format_number(wall) << ",\n";
  man << "  \"schemas\": {\n";
  man << "    \"series.csv\": \"t,m,W,C,K,Pi,E\",\n";
  man << "    \"hist.csv\": \"m,mean_p,std_p\"\n";
  man << "  },\n";
  man << "  \"tolerances\": {\n";
  man << "    \"degeneracy_cluster_rel\": " << format_number(kDoubletTol) << ",\n";
  man << "    \"sign_zero_rel\": " << format_number(kSignStarZeroTol) << ",\n";
  man << "    \"saturation_delta\": " << format_number(config.delta) << ",\n";
  man << "    \"ramp_step_tolerance\": " << format_number(StepControl{}.tolerance)
      << "\n";
  man << "  },\n";
  man << "  \"scalars\": {\n";
  {
    size_t i = 0;
    for (const auto& [k, v] : result.scalars) {
      man << "    \"" << json_escape(k) << "\": " << format_number(v)
          << (++i == result.scalars.size() ? "\n" : ",\n");
    }
  }
  man << "  },\n";
  man << "  \"digests\": {\n";
  {
    size_t i = 0;
    for (const auto& [name, body] : files) {
      man << "    \"" << name << "\": \"" << sha256_hex(body) << "\""
          << (++i == files.size() ? "\n" : ",\n");
    }
  }
  man << "  },\n";
  man << "  \"config\": [\n";
  {
    std::istringstream cfg_lines(config_text(config));
    std::string line;
    bool first = true;
    while (std::getline(cfg_lines, line)) {
      if (!first) man << ",\n";
      man << "    \"" << json_escape(line) << "\"";
      first = false;
    }
    man << "\n  ]\n";
  }
  man << "}\n";
  write_file("manifest.json", man.str());
  return written;
}

}  // namespace sbq
