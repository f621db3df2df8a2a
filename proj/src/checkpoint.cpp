#include "topodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace topodiff {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts need byte swaps");

void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["magic"] = "topodiff-ckpt";
  header["version"] = 1;
  header["meta"] = meta;
  auto tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : params.items) {
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = t->shape;
    e["offset"] = offset;  // bytes from payload start
    e["nbytes"] = uint64_t(t->data.size() * sizeof(float));
    tensors.push_back(e);
    offset += t->data.size() * sizeof(float);
  }
  header["tensors"] = tensors;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path);
  f << header.dump() << "\n";
  for (const auto& [name, t] : params.items) {
    (void)name;
    f.write(reinterpret_cast<const char*>(t->data.data()),
            std::streamsize(t->data.size() * sizeof(float)));
  }
  if (!f) throw DataError("short write on checkpoint: " + path);
}

static nlohmann::json read_header_line(std::ifstream& f, const std::string& path) {
  std::string line;
  if (!std::getline(f, line)) throw DataError("checkpoint is empty or unreadable: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt checkpoint header in " + path + ": " + e.what());
  }
  if (header.value("magic", "") != "topodiff-ckpt")
    throw DataError("not a topodiff checkpoint: " + path);
  return header;
}

nlohmann::json read_checkpoint_header(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  return read_header_line(f, path);
}

nlohmann::json load_checkpoint(const std::string& path, ParamRefs& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  nlohmann::json header = read_header_line(f, path);
  const std::streampos payload_start = f.tellg();

  for (auto& [name, t] : params.items) {
    const nlohmann::json* entry = nullptr;
    for (const auto& e : header["tensors"]) {
      if (e["name"] == name) {
        entry = &e;
        break;
      }
    }
    if (!entry) throw DataError("checkpoint " + path + " is missing tensor " + name);
    std::vector<int> shape = (*entry)["shape"].get<std::vector<int>>();
    if (shape != t->shape) throw DataError("checkpoint shape mismatch for tensor " + name);
    const uint64_t off = (*entry)["offset"].get<uint64_t>();
    const uint64_t nbytes = (*entry)["nbytes"].get<uint64_t>();
    if (nbytes != t->data.size() * sizeof(float))
      throw DataError("checkpoint size mismatch for tensor " + name);
    f.seekg(payload_start + std::streamoff(off));
    f.read(reinterpret_cast<char*>(t->data.data()), std::streamsize(nbytes));
    if (f.gcount() != std::streamsize(nbytes))
      throw DataError("truncated checkpoint payload for tensor " + name + " in " + path);
  }
  return header.value("meta", nlohmann::json::object());
}

}  // namespace topodiff
