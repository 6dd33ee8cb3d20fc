#include "sscil/model/checkpoint.hpp"

#include <torch/torch.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"

namespace sscil {

namespace {

using nlohmann::ordered_json;
constexpr const char* kFormat = "sscil-checkpoint/1";

std::string dtype_tag(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: throw Error(Errc::integrity, "unsupported tensor dtype in checkpoint");
  }
}

torch::ScalarType dtype_from_tag(const std::string& tag) {
  if (tag == "f32") return torch::kFloat32;
  if (tag == "f64") return torch::kFloat64;
  if (tag == "i64") return torch::kInt64;
  throw Error(Errc::integrity, "unknown dtype tag '" + tag + "'");
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::uint64_t fnv1a(const std::string& bytes) { return hash_string(bytes); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "cannot write " + p.string());
}

void append_group(const std::string& group, const TensorMap& tensors, ordered_json& table, std::string& payload) {
  for (const auto& [name, t] : tensors) {
    const auto c = t.detach().contiguous().cpu();
    ordered_json e;
    e["group"] = group;
    e["name"] = name;
    e["dtype"] = dtype_tag(c.scalar_type());
    e["shape"] = c.sizes().vec();
    e["offset"] = payload.size();
    e["bytes"] = c.nbytes();
    payload.append(static_cast<const char*>(c.data_ptr()), c.nbytes());
    table.push_back(std::move(e));
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto& st = checkpoint.state;
  ordered_json spec;
  spec["encoder"] = {{"architecture", st.encoder_spec.architecture},
                     {"feature_dim", st.encoder_spec.feature_dim},
                     {"input_size", st.encoder_spec.input_size}};
  spec["projector"] = {{"depth", st.projector_spec.depth}, {"width", st.projector_spec.width}};

  std::string payload;
  ordered_json table = ordered_json::array();
  append_group("encoder", st.encoder, table, payload);
  append_group("projector", st.projector, table, payload);
  for (const auto& [group, tensors] : checkpoint.extra_tensors) append_group(group, tensors, table, payload);

  ordered_json meta;
  meta["format"] = kFormat;
  meta["phase_index"] = st.phase_index;
  meta["payload_bytes"] = payload.size();
  meta["payload_fnv1a"] = hex(fnv1a(payload));
  meta["tensors"] = std::move(table);
  meta["extras"] = ordered_json::parse(checkpoint.extras_json);

  const fs::path target = fs::absolute(dir);
  fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_file(tmp / "tensors.bin", payload);
  write_file(tmp / "spec.json", spec.dump(2) + "\n");
  write_file(tmp / "meta.json", meta.dump(2) + "\n");
  if (fs::exists(target)) {
    const fs::path old = target.parent_path() / (target.filename().string() + ".old-" + std::to_string(::getpid()));
    fs::rename(target, old);
    fs::rename(tmp, target);
    fs::remove_all(old);
  } else {
    fs::rename(tmp, target);
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint cp;
  ordered_json spec, meta;
  try {
    spec = ordered_json::parse(read_file(dir / "spec.json"));
    meta = ordered_json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::integrity, dir.string() + ": unreadable checkpoint metadata (" + e.what() + ")");
  }
  const std::string payload = read_file(dir / "tensors.bin");
  try {
    if (meta.at("format").get<std::string>() != kFormat) throw Error(Errc::integrity, "unknown checkpoint format");
    if (meta.at("payload_bytes").get<std::size_t>() != payload.size() ||
        meta.at("payload_fnv1a").get<std::string>() != hex(fnv1a(payload))) {
      throw Error(Errc::integrity, dir.string() + ": tensor payload does not match its recorded hash");
    }
    auto& st = cp.state;
    st.phase_index = meta.at("phase_index").get<int>();
    st.encoder_spec.architecture = spec.at("encoder").at("architecture").get<std::string>();
    st.encoder_spec.feature_dim = spec.at("encoder").at("feature_dim").get<int>();
    st.encoder_spec.input_size = spec.at("encoder").at("input_size").get<int>();
    st.projector_spec.depth = spec.at("projector").at("depth").get<int>();
    st.projector_spec.width = spec.at("projector").at("width").get<int>();
    for (const auto& e : meta.at("tensors")) {
      const auto shape = e.at("shape").get<std::vector<int64_t>>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto bytes = e.at("bytes").get<std::size_t>();
      if (offset + bytes > payload.size()) throw Error(Errc::integrity, "tensor table points past the payload");
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from_tag(e.at("dtype").get<std::string>())));
      if (t.nbytes() != bytes) throw Error(Errc::integrity, "tensor size disagrees with its shape");
      std::memcpy(t.data_ptr(), payload.data() + offset, bytes);
      const auto group = e.at("group").get<std::string>();
      auto name = e.at("name").get<std::string>();
      if (group == "encoder") {
        st.encoder.emplace_back(std::move(name), std::move(t));
      } else if (group == "projector") {
        st.projector.emplace_back(std::move(name), std::move(t));
      } else {
        cp.extra_tensors[group].emplace_back(std::move(name), std::move(t));
      }
    }
    cp.extras_json = meta.at("extras").dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::integrity, dir.string() + ": malformed checkpoint metadata (" + e.what() + ")");
  }
  return cp;
}

}  // namespace sscil
