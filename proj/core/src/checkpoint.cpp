#include "sbssl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sbssl/errors.hpp"

namespace sbssl {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'B', 'S', 'S', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void append_f64_le(std::string& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

std::size_t entry_numel(const CheckpointEntry& entry) {
  std::size_t n = 1;
  for (int d : entry.shape) n *= static_cast<std::size_t>(d);
  return n;
}

json config_to_json(const EncoderConfig& c) {
  return {{"depth", c.depth}, {"embed_dim", c.embed_dim}, {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio}};
}

json patch_to_json(const PatchConfig& p) {
  return {{"image_size", p.image_size}, {"patch_size", p.patch_size},
          {"embed_dim", p.embed_dim}, {"channels", p.channels}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.depth = j.at("depth").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  return c;
}

PatchConfig patch_from_json(const json& j) {
  PatchConfig p;
  p.image_size = j.at("image_size").get<int>();
  p.patch_size = j.at("patch_size").get<int>();
  p.embed_dim = j.at("embed_dim").get<int>();
  p.channels = j.at("channels").get<int>();
  return p;
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const CheckpointEntry& e : params) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const std::string& kind, int epoch, std::uint64_t seed,
                           const EncoderConfig& encoder, const PatchConfig& patch,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           AdamW* opt) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  ckpt.epoch = epoch;
  ckpt.seed = seed;
  ckpt.encoder = encoder;
  ckpt.patch = patch;
  for (const auto& [name, tensor] : params) {
    ckpt.params.push_back({name, tensor.shape(), tensor.data()});
  }
  if (opt != nullptr) {
    ckpt.has_adam = true;
    ckpt.adam_steps = opt->steps_taken();
    for (const auto& [name, tensor] : params) {
      if (!opt->has(name)) {
        throw DataError("make_checkpoint: optimizer lacks parameter " + name);
      }
      AdamSlots& slots = opt->slots(name);
      // Slots not yet touched by a step snapshot as zeros of full size.
      if (slots.m.empty()) slots.m.assign(tensor.numel(), 0.0);
      if (slots.v.empty()) slots.v.assign(tensor.numel(), 0.0);
      ckpt.adam.push_back({slots.m, slots.v});
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json meta;
  meta["kind"] = ckpt.kind;
  meta["epoch"] = ckpt.epoch;
  meta["seed"] = ckpt.seed;
  meta["encoder"] = config_to_json(ckpt.encoder);
  meta["patch"] = patch_to_json(ckpt.patch);
  json manifest = json::array();
  for (const CheckpointEntry& e : ckpt.params) {
    manifest.push_back({{"name", e.name}, {"shape", e.shape}});
  }
  meta["params"] = manifest;
  meta["adam"] = ckpt.has_adam ? json{{"steps", ckpt.adam_steps}} : json(nullptr);

  const std::string meta_text = meta.dump();
  std::string payload;
  for (const CheckpointEntry& e : ckpt.params) {
    if (e.values.size() != entry_numel(e)) {
      throw DataError("save_checkpoint: " + e.name + " has " + std::to_string(e.values.size()) +
                      " values for its shape");
    }
    for (double v : e.values) append_f64_le(payload, v);
  }
  if (ckpt.has_adam) {
    if (ckpt.adam.size() != ckpt.params.size()) {
      throw DataError("save_checkpoint: optimizer entries do not cover every parameter");
    }
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
      const std::size_t n = entry_numel(ckpt.params[i]);
      if (ckpt.adam[i].m.size() != n || ckpt.adam[i].v.size() != n) {
        throw DataError("save_checkpoint: optimizer buffer size mismatch for " +
                        ckpt.params[i].name);
      }
      for (double v : ckpt.adam[i].m) append_f64_le(payload, v);
      for (double v : ckpt.adam[i].v) append_f64_le(payload, v);
    }
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("save_checkpoint: cannot open " + path.string());
  out.write(kMagic, 8);
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((kVersion >> (8 * i)) & 0xff));
  const std::uint64_t meta_size = meta_text.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((meta_size >> (8 * i)) & 0xff));
  out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError("load_checkpoint: " + path.string() + " is not a checkpoint file");
  }
  std::uint32_t version = 0;
  for (int i = 3; i >= 0; --i) version = (version << 8) | bytes[8 + i];
  if (version != kVersion) {
    throw DataError("load_checkpoint: unsupported version " + std::to_string(version));
  }
  std::uint64_t meta_size = 0;
  for (int i = 7; i >= 0; --i) meta_size = (meta_size << 8) | bytes[12 + i];
  if (bytes.size() < 20 + meta_size) {
    throw DataError("load_checkpoint: metadata extends past end of file");
  }

  json meta;
  try {
    meta = json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(meta_size));
  } catch (const json::exception& e) {
    throw DataError(std::string("load_checkpoint: bad metadata: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.kind = meta.at("kind").get<std::string>();
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.encoder = config_from_json(meta.at("encoder"));
    ckpt.patch = patch_from_json(meta.at("patch"));
    for (const json& item : meta.at("params")) {
      CheckpointEntry entry;
      entry.name = item.at("name").get<std::string>();
      entry.shape = item.at("shape").get<std::vector<int>>();
      ckpt.params.push_back(std::move(entry));
    }
    if (!meta.at("adam").is_null()) {
      ckpt.has_adam = true;
      ckpt.adam_steps = meta.at("adam").at("steps").get<long>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("load_checkpoint: incomplete metadata: ") + e.what());
  }

  std::size_t total = 0;
  for (const CheckpointEntry& e : ckpt.params) total += entry_numel(e);
  const std::size_t expected = total * 8 * (ckpt.has_adam ? 3 : 1);
  const std::size_t payload_start = 20 + meta_size;
  if (bytes.size() - payload_start != expected) {
    throw DataError("load_checkpoint: payload holds " +
                    std::to_string(bytes.size() - payload_start) + " bytes, expected " +
                    std::to_string(expected));
  }

  const unsigned char* cursor = bytes.data() + payload_start;
  for (CheckpointEntry& e : ckpt.params) {
    const std::size_t n = entry_numel(e);
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i, cursor += 8) e.values[i] = read_f64_le(cursor);
  }
  if (ckpt.has_adam) {
    for (const CheckpointEntry& e : ckpt.params) {
      const std::size_t n = entry_numel(e);
      CheckpointAdamEntry slots;
      slots.m.resize(n);
      for (std::size_t i = 0; i < n; ++i, cursor += 8) slots.m[i] = read_f64_le(cursor);
      slots.v.resize(n);
      for (std::size_t i = 0; i < n; ++i, cursor += 8) slots.v[i] = read_f64_le(cursor);
      ckpt.adam.push_back(std::move(slots));
    }
  }
  return ckpt;
}

void restore_parameters(const Checkpoint& ckpt,
                        const std::vector<std::pair<std::string, Tensor>>& targets) {
  if (targets.size() != ckpt.params.size()) {
    throw DataError("restore_parameters: " + std::to_string(targets.size()) +
                    " targets vs " + std::to_string(ckpt.params.size()) + " stored parameters");
  }
  for (const auto& [name, tensor] : targets) {
    const CheckpointEntry* entry = ckpt.find(name);
    if (entry == nullptr) throw DataError("restore_parameters: checkpoint lacks " + name);
    if (entry->shape != tensor.shape()) {
      throw DataError("restore_parameters: shape mismatch for " + name);
    }
    Tensor target = tensor;  // handle copy; storage is shared
    target.data() = entry->values;
  }
}

void restore_optimizer(const Checkpoint& ckpt, AdamW& opt) {
  if (!ckpt.has_adam) throw DataError("restore_optimizer: checkpoint has no optimizer state");
  if (opt.size() != ckpt.params.size()) {
    throw DataError("restore_optimizer: optimizer registers " + std::to_string(opt.size()) +
                    " parameters, checkpoint stores " + std::to_string(ckpt.params.size()));
  }
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const std::string& name = ckpt.params[i].name;
    if (!opt.has(name)) throw DataError("restore_optimizer: optimizer lacks " + name);
    AdamSlots& slots = opt.slots(name);
    slots.m = ckpt.adam[i].m;
    slots.v = ckpt.adam[i].v;
    slots.step = ckpt.adam_steps;
  }
  opt.set_steps_taken(ckpt.adam_steps);
}

}  // namespace sbssl
