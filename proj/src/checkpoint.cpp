// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kernels/trace_kernel.hpp"
#include "circuits/common.hpp"

namespace circuits::detail {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are little-endian");

namespace {

constexpr const char* kFormat = "circuits-trace-checkpoint";

nlohmann::json layout_of(const TraceProblem& problem) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& plan : problem.plans) {
    out.push_back({{"layer", plan.layer}, {"sources", plan.sources}, {"targets", plan.targets}, {"block", plan.block()}});
  }
  return out;
}

template <typename T>
void put(std::string& buf, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw FormatError("checkpoint blob is truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::uint64_t hash, std::int64_t cells_done,
                     const TraceProblem& problem, const TraceState& state) {
  nlohmann::json header;
  header["format"] = kFormat;
  header["config_hash"] = Fingerprint::to_hex(hash);
  header["cells_done"] = cells_done;
  header["layout"] = layout_of(problem);

  std::string blob;
  put(blob, state.skipped_cells);
  for (std::size_t p = 0; p < state.acc.size(); ++p) {
    put(blob, state.passes[p]);
    put(blob, state.skipped_passes[p]);
    put(blob, state.seconds[p]);
    for (const auto& a : state.acc[p]) {
      put(blob, a.n);
      put(blob, a.mean);
      put(blob, a.m2);
      put(blob, a.pos);
      put(blob, a.neg);
      put(blob, a.zero);
    }
  }
  header["blob_bytes"] = blob.size();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint " + tmp.string());
    os << header.dump() << '\n';
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!os) throw ConfigError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t hash, const TraceProblem& problem) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(is, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != kFormat) throw FormatError(path.string() + " is not a trace checkpoint");
  const std::string stored = header.value("config_hash", "");
  if (stored != Fingerprint::to_hex(hash)) {
    throw ConfigError("checkpoint " + path.string() + " was written with config hash " + stored +
                      ", current run has " + Fingerprint::to_hex(hash) + "; refusing to resume");
  }
  if (header.at("layout") != layout_of(problem)) {
    throw ConfigError("checkpoint " + path.string() + " layout does not match the current sources");
  }
  std::ostringstream rest;
  rest << is.rdbuf();
  const std::string blob = rest.str();
  if (blob.size() != header.at("blob_bytes").get<std::size_t>()) throw FormatError("checkpoint blob size mismatch");

  LoadedCheckpoint out;
  out.cells_done = header.at("cells_done").get<std::int64_t>();
  out.state = TraceState::empty_for(problem);
  std::size_t pos = 0;
  out.state.skipped_cells = take<std::int64_t>(blob, pos);
  for (std::size_t p = 0; p < out.state.acc.size(); ++p) {
    out.state.passes[p] = take<std::int64_t>(blob, pos);
    out.state.skipped_passes[p] = take<std::int64_t>(blob, pos);
    out.state.seconds[p] = take<double>(blob, pos);
    for (auto& a : out.state.acc[p]) {
      a.n = take<std::int64_t>(blob, pos);
      a.mean = take<double>(blob, pos);
      a.m2 = take<double>(blob, pos);
      a.pos = take<std::int64_t>(blob, pos);
      a.neg = take<std::int64_t>(blob, pos);
      a.zero = take<std::int64_t>(blob, pos);
    }
  }
  if (pos != blob.size()) throw FormatError("checkpoint blob has trailing bytes");
  return out;
}

}  // namespace circuits::detail
