#include "kpgen/io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kpgen {

using json = nlohmann::json;

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void save_checkpoint(const std::string& path, const std::string& kind, const json& meta,
                     const ParameterStore& params) {
  json doc;
  doc["format"] = "kpgen-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind;
  doc["meta"] = meta;
  json list = json::array();
  for (const auto* p : params.all()) {
    list.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}, {"values", p->value.values()}});
  }
  doc["params"] = std::move(list);
  atomic_write(path, doc.dump() + "\n");
}

namespace {

json read_container(const std::string& path, const std::string& kind) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "kpgen-checkpoint") throw std::runtime_error(path + " is not a checkpoint");
  if (doc.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " + doc["version"].dump());
  if (doc.value("kind", "") != kind)
    throw std::runtime_error(path + ": expected a " + kind + " checkpoint, found " + doc.value("kind", "?"));
  return doc;
}

}  // namespace

json read_checkpoint_meta(const std::string& path, const std::string& kind) {
  return read_container(path, kind)["meta"];
}

json load_checkpoint(const std::string& path, const std::string& kind, ParameterStore& params) {
  json doc = read_container(path, kind);
  size_t seen = 0;
  for (const auto& entry : doc["params"]) {
    const std::string name = entry["name"].get<std::string>();
    if (!params.has(name)) throw std::runtime_error(path + ": unexpected parameter " + name);
    Parameter& p = params.get(name);
    const size_t rows = entry["shape"][0].get<size_t>();
    const size_t cols = entry["shape"][1].get<size_t>();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw std::runtime_error(path + ": shape mismatch for " + name);
    p.value = Matrix(rows, cols, entry["values"].get<std::vector<double>>());
    ++seen;
  }
  if (seen != params.count()) throw std::runtime_error(path + ": checkpoint is missing parameters");
  return doc["meta"];
}

}  // namespace kpgen
