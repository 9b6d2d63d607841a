#include "steinwave/io.hpp"

#include <array>
#include <cinttypes>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace steinwave::io {

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  // %.17g round-trips doubles exactly, keeping reruns byte-identical
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

}  // namespace

std::string FileHeader::render() const {
  std::ostringstream os;
  std::array<char, 24> hash{};
  std::snprintf(hash.data(), hash.size(), "%016" PRIx64, config_hash);
  os << "# schema=" << schema << " version=" << kVersion << " config_hash=" << hash.data()
     << " seed=" << seed << "\n";
  os << "# generated=" << timestamp_utc() << "\n";
  return os.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_timestamps(const std::string& content) {
  std::istringstream in(content);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# generated=", 0) == 0) continue;
    out << line << "\n";
  }
  return out.str();
}

std::string to_csv(const wave::ObservationRecord& record, const FileHeader& header) {
  std::ostringstream os;
  os << header.render();
  os << "# nodes=";
  for (std::size_t i = 0; i < record.node_positions.size(); ++i) {
    if (i) os << ",";
    os << format_double(record.node_positions[i]);
  }
  os << "\n";
  os << "time";
  for (std::size_t i = 0; i < record.node_positions.size(); ++i) os << ",u" << i;
  os << "\n";
  for (std::size_t t = 0; t < record.times.size(); ++t) {
    os << format_double(record.times[t]);
    for (Eigen::Index i = 0; i < record.values.rows(); ++i)
      os << "," << format_double(record.values(i, static_cast<Eigen::Index>(t)));
    os << "\n";
  }
  return os.str();
}

wave::ObservationRecord record_from_csv(const std::string& content) {
  wave::ObservationRecord rec;
  std::istringstream in(content);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# nodes=", 0) == 0) {
      std::istringstream ns(line.substr(8));
      std::string tok;
      while (std::getline(ns, tok, ',')) rec.node_positions.push_back(std::stod(tok));
      continue;
    }
    if (line[0] == '#' || line.rfind("time", 0) == 0) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("record csv has no data rows");
  const auto n_obs = rows.front().size() - 1;
  if (rec.node_positions.size() != n_obs)
    throw std::runtime_error("record csv node header does not match the column count");
  rec.times.resize(rows.size());
  rec.values.resize(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    rec.times[t] = rows[t][0];
    for (std::size_t i = 0; i < n_obs; ++i)
      rec.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[t][i + 1];
  }
  return rec;
}

std::string to_csv(const vi::Trace& trace, const FileHeader& header) {
  std::ostringstream os;
  os << header.render();
  os << "iteration,loss,elbo,sup_norm,alpha,forward_solves\n";
  for (const auto& r : trace.rows) {
    os << r.iteration << "," << format_double(r.loss) << "," << format_double(r.elbo) << ","
       << format_double(r.sup_norm) << "," << format_double(r.alpha) << "," << r.forward_solves
       << "\n";
  }
  return os.str();
}

std::string to_json(const vi::Trace& trace, const FileHeader& header) {
  nlohmann::json j;
  std::array<char, 24> hash{};
  std::snprintf(hash.data(), hash.size(), "%016" PRIx64, header.config_hash);
  j["meta"] = {{"schema", header.schema},
               {"version", kVersion},
               {"config_hash", hash.data()},
               {"seed", header.seed},
               {"generated", timestamp_utc()}};
  j["converged"] = trace.converged;
  j["stop_reason"] = trace.stop_reason;
  j["timing"] = {{"wall_seconds", trace.wall_seconds}};
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : trace.rows)
    rows.push_back({{"iteration", r.iteration},
                    {"loss", r.loss},
                    {"elbo", r.elbo},
                    {"sup_norm", r.sup_norm},
                    {"alpha", r.alpha},
                    {"forward_solves", r.forward_solves}});
  return j.dump(2) + "\n";
}

std::string to_csv(const mcmc::Chain& chain, const FileHeader& header) {
  std::ostringstream os;
  os << header.render();
  os << "sample";
  for (Eigen::Index k = 0; k < chain.samples.cols(); ++k) os << ",theta" << k;
  os << ",log_posterior\n";
  for (Eigen::Index s = 0; s < chain.samples.rows(); ++s) {
    os << s;
    for (Eigen::Index k = 0; k < chain.samples.cols(); ++k)
      os << "," << format_double(chain.samples(s, k));
    os << "," << format_double(chain.log_posterior[s]) << "\n";
  }
  return os.str();
}

}  // namespace steinwave::io
