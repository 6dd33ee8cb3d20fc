#include "sscil/runner/run_dir.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>

#include "sscil/common/error.hpp"
#include "sscil/common/text.hpp"

namespace sscil {

namespace fs = std::filesystem;
using text::parse_int;
using text::split_csv;
using text::trim;

namespace {

bool try_create(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) return false;
    throw Error(Errc::io, "cannot create lock " + path.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  if (written != static_cast<ssize_t>(pid.size())) throw Error(Errc::io, "cannot write lock " + path.string());
  return true;
}

bool holder_alive(const fs::path& path) {
  std::ifstream in(path);
  long pid = 0;
  if (!(in >> pid) || pid <= 0) return false;
  if (pid == ::getpid()) return true;
  return ::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM;
}

}  // namespace

RunLock::RunLock(fs::path path) : path_(std::move(path)) {
  if (try_create(path_)) return;
  if (holder_alive(path_)) throw Error(Errc::locked, "run directory is in use: " + path_.parent_path().string());
  fs::remove(path_);
  if (!try_create(path_)) throw Error(Errc::locked, "run directory is in use: " + path_.parent_path().string());
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_ledger(const RunPaths& paths, nlohmann::ordered_json event) {
  event["timestamp"] = utc_timestamp();
  std::ofstream out(paths.ledger(), std::ios::app);
  if (!out) throw Error(Errc::io, "cannot append to " + paths.ledger().string());
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::io, "cannot append to " + paths.ledger().string());
}

std::vector<nlohmann::json> read_ledger(const RunPaths& paths) {
  std::vector<nlohmann::json> events;
  std::ifstream in(paths.ledger());
  if (!in) return events;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::integrity, paths.ledger().string() + " line " + std::to_string(n) + " is not valid JSON");
    }
  }
  return events;
}

std::vector<int> completed_phases(const std::vector<nlohmann::json>& ledger) {
  std::vector<int> out;
  for (const auto& e : ledger) {
    if (e.value("event", "") == "phase-complete") out.push_back(e.at("phase").get<int>());
  }
  return out;
}

std::string format_value(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void append_metrics(const RunPaths& paths, const std::vector<MetricRow>& rows) {
  const bool fresh = !fs::exists(paths.metrics());
  std::ofstream out(paths.metrics(), std::ios::app);
  if (!out) throw Error(Errc::io, "cannot append to " + paths.metrics().string());
  if (fresh) out << "run_id,phase,metric,value,timestamp\n";
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.phase << ',' << r.metric << ',' << r.value << ',' << r.timestamp << '\n';
  }
  out.flush();
  if (!out) throw Error(Errc::io, "cannot append to " + paths.metrics().string());
}

std::vector<MetricRow> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<MetricRow> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw Error(Errc::integrity, path.string() + " line " + std::to_string(n) + ": expected 5 fields");
    long long phase = 0;
    if (!parse_int(f[1], phase)) throw Error(Errc::integrity, path.string() + " line " + std::to_string(n) + ": bad phase");
    rows.push_back({f[0], static_cast<int>(phase), f[2], f[3], f[4]});
  }
  return rows;
}

void truncate_metrics(const RunPaths& paths, int last_phase) {
  if (!fs::exists(paths.metrics())) return;
  auto rows = read_metrics(paths.metrics());
  std::erase_if(rows, [&](const MetricRow& r) { return r.phase > last_phase; });
  const auto tmp = paths.metrics().string() + ".tmp";
  fs::remove(tmp);
  {
    std::ofstream out(tmp);
    out << "run_id,phase,metric,value,timestamp\n";
  }
  fs::rename(tmp, paths.metrics());
  append_metrics(paths, rows);
}

}  // namespace sscil
