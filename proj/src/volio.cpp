#include "mskm/volio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace mskm {

namespace {

constexpr char kMagic[8] = {'F', '4', 'D', 'V', '0', '0', '0', '1'};

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

uint32_t get_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

float get_f32(const unsigned char* p) {
  uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

struct RawFile {
  Volume4D volume;
  VolumeKind kind;
};

RawFile read_f4d_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open '" + path + "' for reading");
  in.seekg(0, std::ios::end);
  const uint64_t file_size = uint64_t(in.tellg());
  in.seekg(0);

  if (file_size < kF4dHeaderBytes)
    throw_format(path + ": truncated header (byte offset " +
                 std::to_string(file_size) + ")");

  unsigned char header[kF4dHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kF4dHeaderBytes);
  if (std::memcmp(header, kMagic, 8) != 0)
    throw_format(path + ": bad magic (byte offset 0)");

  Volume4D v;
  v.geometry.nx = get_u32(header + 8);
  v.geometry.ny = get_u32(header + 12);
  v.geometry.nz = get_u32(header + 16);
  v.nt = get_u32(header + 20);
  v.geometry.dx = get_f32(header + 24);
  v.geometry.dy = get_f32(header + 28);
  v.geometry.dz = get_f32(header + 32);
  v.geometry.tr = get_f32(header + 36);
  const uint8_t kind = header[40];

  if (v.geometry.nx == 0 || v.geometry.ny == 0 || v.geometry.nz == 0 || v.nt == 0)
    throw_format(path + ": zero dimension (byte offset 8)");
  // Reject dimension products that overflow before allocating anything.
  const uint64_t nvox = uint64_t(v.geometry.nx) * v.geometry.ny;
  if (nvox > std::numeric_limits<uint64_t>::max() / v.geometry.nz)
    throw_format(path + ": dimension overflow (byte offset 8)");
  const uint64_t nvol = nvox * v.geometry.nz;
  if (nvol > std::numeric_limits<uint64_t>::max() / v.nt / 4)
    throw_format(path + ": dimension overflow (byte offset 8)");
  const uint64_t payload = nvol * v.nt * 4;
  if (payload > (uint64_t(1) << 40))
    throw_format(path + ": payload larger than 1 TiB rejected (byte offset 8)");

  if (!(v.geometry.dx > 0.f) || !(v.geometry.dy > 0.f) || !(v.geometry.dz > 0.f) ||
      !std::isfinite(v.geometry.dx) || !std::isfinite(v.geometry.dy) ||
      !std::isfinite(v.geometry.dz))
    throw_format(path + ": voxel spacing must be positive and finite (byte offset 24)");
  if (!(v.geometry.tr >= 0.f) || !std::isfinite(v.geometry.tr))
    throw_format(path + ": tr must be non-negative and finite (byte offset 36)");
  if (kind > 2)
    throw_format(path + ": unknown kind tag " + std::to_string(kind) +
                 " (byte offset 40)");

  if (file_size != kF4dHeaderBytes + payload)
    throw_format(path + ": payload size mismatch, header declares " +
                 std::to_string(payload) + " bytes but file has " +
                 std::to_string(file_size - kF4dHeaderBytes) +
                 " (byte offset " + std::to_string(kF4dHeaderBytes) + ")");

  const std::size_t count = std::size_t(nvol * v.nt);
  std::vector<unsigned char> raw(payload);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(payload));
  if (!in) throw_io(path + ": short read");

  v.voxels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float f = get_f32(raw.data() + i * 4);
    if (!std::isfinite(f))
      throw_format(path + ": non-finite value at byte offset " +
                   std::to_string(kF4dHeaderBytes + i * 4));
    v.voxels[i] = f;
  }
  return {std::move(v), VolumeKind(kind)};
}

}  // namespace

uint32_t LabelVolume::max_label() const {
  uint32_t k = 0;
  for (uint32_t l : labels) k = std::max(k, l);
  return k;
}

std::size_t MaskVolume::count() const {
  std::size_t n = 0;
  for (uint8_t f : flags) n += f ? 1 : 0;
  return n;
}

Volume4D read_f4d(const std::string& path, VolumeKind* kind_out) {
  RawFile raw = read_f4d_raw(path);
  if (kind_out) *kind_out = raw.kind;
  return std::move(raw.volume);
}

void write_f4d(const Volume4D& v, const std::string& path, VolumeKind kind) {
  const std::size_t count = v.geometry.voxel_count() * v.nt;
  if (v.voxels.size() != count)
    throw_invalid("write_f4d: voxel buffer size does not match dimensions");
  for (float f : v.voxels)
    if (!std::isfinite(f)) throw_invalid("write_f4d: non-finite voxel value");
  if (kind == VolumeKind::Labels) (void)labels_from_volume(v);
  if (kind == VolumeKind::Mask) (void)mask_from_volume(v);

  std::string buf;
  buf.reserve(kF4dHeaderBytes + count * 4);
  buf.append(kMagic, 8);
  put_u32(buf, v.geometry.nx);
  put_u32(buf, v.geometry.ny);
  put_u32(buf, v.geometry.nz);
  put_u32(buf, v.nt);
  put_f32(buf, v.geometry.dx);
  put_f32(buf, v.geometry.dy);
  put_f32(buf, v.geometry.dz);
  put_f32(buf, v.geometry.tr);
  buf.push_back(char(uint8_t(kind)));
  for (float f : v.voxels) put_f32(buf, f);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw_io("write failed for '" + path + "'");
}

LabelVolume labels_from_volume(const Volume4D& v) {
  if (v.nt != 1) throw_format("label volume must have nt = 1");
  LabelVolume out;
  out.geometry = v.geometry;
  out.labels.resize(v.voxels.size());
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    const float f = v.voxels[i];
    const float r = std::round(f);
    if (std::abs(f - r) > 1e-6f || r < 0.f)
      throw_format("label value " + std::to_string(f) +
                   " is not a non-negative integer (voxel " + std::to_string(i) + ")");
    out.labels[i] = uint32_t(r);
  }
  return out;
}

MaskVolume mask_from_volume(const Volume4D& v) {
  if (v.nt != 1) throw_format("mask volume must have nt = 1");
  MaskVolume out;
  out.geometry = v.geometry;
  out.flags.resize(v.voxels.size());
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    const float f = v.voxels[i];
    if (f != 0.f && f != 1.f)
      throw_format("mask value " + std::to_string(f) +
                   " is not 0.0 or 1.0 (voxel " + std::to_string(i) + ")");
    out.flags[i] = f == 1.f ? 1 : 0;
  }
  return out;
}

Volume4D volume_from_labels(const LabelVolume& v) {
  Volume4D out;
  out.geometry = v.geometry;
  out.nt = 1;
  out.voxels.resize(v.labels.size());
  for (std::size_t i = 0; i < v.labels.size(); ++i)
    out.voxels[i] = float(v.labels[i]);
  return out;
}

Volume4D volume_from_mask(const MaskVolume& v) {
  Volume4D out;
  out.geometry = v.geometry;
  out.nt = 1;
  out.voxels.resize(v.flags.size());
  for (std::size_t i = 0; i < v.flags.size(); ++i)
    out.voxels[i] = v.flags[i] ? 1.f : 0.f;
  return out;
}

LabelVolume read_labels(const std::string& path) {
  RawFile raw = read_f4d_raw(path);
  if (raw.kind != VolumeKind::Labels)
    throw_format(path + ": expected kind 1 (labels), found " +
                 std::to_string(int(raw.kind)) + " (byte offset 40)");
  return labels_from_volume(raw.volume);
}

void write_labels(const LabelVolume& v, const std::string& path) {
  write_f4d(volume_from_labels(v), path, VolumeKind::Labels);
}

MaskVolume read_mask(const std::string& path) {
  RawFile raw = read_f4d_raw(path);
  if (raw.kind != VolumeKind::Mask)
    throw_format(path + ": expected kind 2 (mask), found " +
                 std::to_string(int(raw.kind)) + " (byte offset 40)");
  return mask_from_volume(raw.volume);
}

void write_mask(const MaskVolume& v, const std::string& path) {
  write_f4d(volume_from_mask(v), path, VolumeKind::Mask);
}

std::string format_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_centroids_csv(const std::vector<std::vector<double>>& rows,
                         const std::string& path, bool header) {
  std::string body;
  if (header && !rows.empty()) {
    for (std::size_t t = 0; t < rows.front().size(); ++t) {
      if (t) body.push_back(',');
      body += "t" + std::to_string(t);
    }
    body.push_back('\n');
  }
  for (const auto& row : rows) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (!std::isfinite(row[t]))
        throw_invalid("write_centroids_csv: non-finite value");
      if (t) body.push_back(',');
      body += format_shortest(row[t]);
    }
    body.push_back('\n');
  }
  write_text_file(path, body);
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out.write(body.data(), std::streamsize(body.size()));
  if (!out) throw_io("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open '" + path + "' for reading");
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return body;
}

std::string tree_to_json(const HierarchyTree& tree) {
  nlohmann::json j;
  j["format"] = "mskm-tree/1";
  j["ct"] = tree.ct;
  j["ns"] = tree.ns;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json jn;
    jn["id"] = n.id;
    jn["stage"] = n.stage;
    jn["parent"] = n.parent;
    if (n.child_a >= 0)
      jn["children"] = {n.child_a, n.child_b};
    else
      jn["children"] = nullptr;
    jn["converged"] = n.converged;
    jn["voxel_count"] = n.voxel_count;
    jn["centroid"] = n.centroid;
    if (n.split_child_correlation)
      jn["split_child_correlation"] = *n.split_child_correlation;
    else
      jn["split_child_correlation"] = nullptr;
    if (n.cluster_number > 0)
      jn["cluster"] = n.cluster_number;
    else
      jn["cluster"] = nullptr;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  nlohmann::json fc = nlohmann::json::array();
  for (std::size_t k = 0; k < tree.final_clusters.size(); ++k) {
    fc.push_back({{"label", k + 1}, {"leaf_nodes", tree.final_clusters[k]}});
  }
  j["final_clusters"] = std::move(fc);
  return j.dump(2) + "\n";
}

HierarchyTree tree_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw_format(std::string("tree JSON parse error: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "mskm-tree/1")
      throw_format("tree JSON: unknown format tag");
    HierarchyTree tree;
    tree.ct = j.at("ct").get<double>();
    tree.ns = j.at("ns").get<int>();
    for (const auto& jn : j.at("nodes")) {
      HierarchyNode n;
      n.id = jn.at("id").get<int>();
      n.stage = jn.at("stage").get<int>();
      n.parent = jn.at("parent").get<int>();
      if (!jn.at("children").is_null()) {
        n.child_a = jn.at("children").at(0).get<int>();
        n.child_b = jn.at("children").at(1).get<int>();
      }
      n.converged = jn.at("converged").get<bool>();
      n.voxel_count = jn.at("voxel_count").get<std::size_t>();
      n.centroid = jn.at("centroid").get<std::vector<double>>();
      if (!jn.at("split_child_correlation").is_null())
        n.split_child_correlation = jn.at("split_child_correlation").get<double>();
      if (!jn.at("cluster").is_null())
        n.cluster_number = jn.at("cluster").get<int>();
      tree.nodes.push_back(std::move(n));
    }
    for (const auto& jc : j.at("final_clusters"))
      tree.final_clusters.push_back(jc.at("leaf_nodes").get<std::vector<int>>());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
      if (tree.nodes[i].id != int(i))
        throw_format("tree JSON: node ids must be dense and ordered");
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw_format(std::string("tree JSON schema error: ") + e.what());
  }
}

void write_tree_json(const HierarchyTree& tree, const std::string& path) {
  write_text_file(path, tree_to_json(tree));
}

HierarchyTree read_tree_json(const std::string& path) {
  return tree_from_json(read_text_file(path));
}

}  // namespace mskm
