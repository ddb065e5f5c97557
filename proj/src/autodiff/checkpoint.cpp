#include "avnav/autodiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace avnav::ad {
namespace {

constexpr const char* kMagic = "avnav-checkpoint";
constexpr int kVersion = 1;

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
    throw std::invalid_argument(std::string("checkpoint ") + what + " '" + s +
                                "' must be a non-empty token");
  }
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".manifest");
}

std::filesystem::path blob_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt) {
  if (stem.has_parent_path()) {
    std::filesystem::create_directories(stem.parent_path());
  }
  std::ofstream manifest(manifest_path(stem), std::ios::trunc);
  std::ofstream blob(blob_path(stem), std::ios::binary | std::ios::trunc);
  if (!manifest || !blob) {
    throw std::runtime_error("cannot open checkpoint files for " +
                             stem.string());
  }
  manifest << kMagic << ' ' << kVersion << '\n';
  for (const auto& [key, value] : ckpt.meta) {
    check_token(key, "meta key");
    check_token(value, "meta value");
    manifest << "meta " << key << ' ' << value << '\n';
  }
  std::uint64_t offset = 0;
  for (const NamedTensor& t : ckpt.tensors) {
    check_token(t.name, "tensor name");
    manifest << "tensor " << t.name << ' ' << t.tensor.shape().size();
    for (std::size_t d : t.tensor.shape()) manifest << ' ' << d;
    manifest << ' ' << offset << '\n';
    for (float v : t.tensor.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      const char bytes[4] = {static_cast<char>(bits & 0xff),
                             static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff),
                             static_cast<char>((bits >> 24) & 0xff)};
      blob.write(bytes, 4);
    }
    offset += 4 * t.tensor.size();
  }
  if (!manifest.good() || !blob.good()) {
    throw std::runtime_error("failed writing checkpoint " + stem.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream manifest(manifest_path(stem));
  std::ifstream blob(blob_path(stem), std::ios::binary);
  if (!manifest || !blob) {
    throw std::runtime_error("cannot open checkpoint " + stem.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(blob)),
                    std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  std::string line;
  if (!std::getline(manifest, line)) {
    throw std::runtime_error("empty checkpoint manifest " + stem.string());
  }
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic || version != kVersion) {
      throw std::runtime_error("unrecognised checkpoint header: " + line);
    }
  }
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream rec(line);
    std::string kind;
    rec >> kind;
    if (kind == "meta") {
      std::string key, value;
      rec >> key >> value;
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rank = 0;
      rec >> name >> rank;
      Shape shape(rank);
      for (std::size_t& d : shape) rec >> d;
      std::uint64_t offset = 0;
      rec >> offset;
      if (!rec) throw std::runtime_error("malformed tensor record: " + line);
      const std::size_t count = shape_size(shape);
      if (offset + 4 * count > bytes.size()) {
        throw std::runtime_error("checkpoint blob too short for '" + name + "'");
      }
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto* p =
            reinterpret_cast<const unsigned char*>(bytes.data() + offset + 4 * i);
        const std::uint32_t bits = std::uint32_t(p[0]) |
                                   (std::uint32_t(p[1]) << 8) |
                                   (std::uint32_t(p[2]) << 16) |
                                   (std::uint32_t(p[3]) << 24);
        values[i] = std::bit_cast<float>(bits);
      }
      ckpt.tensors.push_back({name, Tensor::from(shape, std::move(values))});
    } else {
      throw std::runtime_error("unknown checkpoint record: " + line);
    }
  }
  return ckpt;
}

void assign_tensors(const Checkpoint& source, std::vector<NamedTensor>& targets) {
  for (NamedTensor& t : targets) {
    const Tensor& src = source.get(t.name);
    if (src.shape() != t.tensor.shape()) {
      throw std::runtime_error("checkpoint shape mismatch for '" + t.name +
                               "': " + shape_string(src.shape()) + " vs " +
                               shape_string(t.tensor.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.tensor.data().begin());
  }
}

}  // namespace avnav::ad
