#include "hetflow/workload.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "hetflow/errors.hpp"
#include "hetflow/io_util.hpp"
#include "hetflow/rng.hpp"

namespace hetflow {

void validate(const WorkloadSpec& spec) {
  if (spec.std_mb <= 0.0)
    throw ConfigError("workload: std_mb must be positive");
  if (spec.min_mb <= 0.0)
    throw ConfigError("workload: min_mb must be positive");
  if (spec.max_mb <= spec.min_mb)
    throw ConfigError("workload: max_mb must exceed min_mb");
}

Workload generate_workload(const WorkloadSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  Workload out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    double size = 0.0;
    // Rejection keeps the in-range shape intact instead of piling mass at
    // the bounds the way clamping would.
    do {
      size = rng.gaussian(spec.mean_mb, spec.std_mb);
    } while (size < spec.min_mb || size > spec.max_mb);
    char id[32];
    std::snprintf(id, sizeof(id), "img-%06zu", i);
    out.push_back({id, size});
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return s.substr(b, e - b);
}

} // namespace

Workload read_workload_csv(std::istream& in, const std::string& origin) {
  Workload out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty())
      continue;
    if (lineno == 1) {
      if (t != "id,size_mb")
        throw InputError(origin + ": expected header 'id,size_mb', got '" + t + "'");
      continue;
    }
    auto comma = t.find(',');
    if (comma == std::string::npos)
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected 'id,size_mb' row");
    std::string id = trim(t.substr(0, comma));
    std::string size_str = trim(t.substr(comma + 1));
    if (id.empty())
      throw InputError(origin + ":" + std::to_string(lineno) + ": empty image id");
    double size = 0.0;
    try {
      std::size_t pos = 0;
      size = std::stod(size_str, &pos);
      if (pos != size_str.size())
        throw std::invalid_argument(size_str);
    } catch (const std::exception&) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": bad size '" + size_str + "'");
    }
    if (size <= 0.0)
      throw InputError(origin + ":" + std::to_string(lineno) + ": size must be positive, got " +
                       size_str);
    if (!seen.insert(id).second)
      throw InputError(origin + ":" + std::to_string(lineno) + ": duplicate image id '" + id + "'");
    out.push_back({std::move(id), size});
  }
  return out;
}

Workload load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open workload manifest: " + path);
  return read_workload_csv(in, path);
}

void write_workload_csv(const Workload& workload, std::ostream& out) {
  out << "id,size_mb\n";
  for (const auto& img : workload)
    out << img.id << ',' << format_double(img.size_mb) << '\n';
}

void save_workload(const Workload& workload, const std::string& path) {
  std::ostringstream ss;
  write_workload_csv(workload, ss);
  atomic_write_file(path, ss.str());
}

double total_size_mb(const Workload& workload) {
  double total = 0.0;
  for (const auto& img : workload)
    total += img.size_mb;
  return total;
}

std::uint64_t fingerprint(const Workload& workload) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& img : workload) {
    h = fnv1a(img.id, h);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", img.size_mb);
    h = fnv1a(buf, h);
  }
  return h;
}

} // namespace hetflow
