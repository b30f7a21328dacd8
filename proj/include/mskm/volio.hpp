#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mskm/core.hpp"
#include "mskm/errors.hpp"

namespace mskm {

struct VolumeGeometry {
  uint32_t nx = 1, ny = 1, nz = 1;   // voxel counts
  float dx = 1.f, dy = 1.f, dz = 1.f;  // mm per voxel
  float tr = 0.f;                      // seconds per frame; 0 for non-temporal

  std::size_t voxel_count() const {
    return std::size_t(nx) * ny * nz;
  }
  std::size_t linear(uint32_t x, uint32_t y, uint32_t z) const {
    return (std::size_t(z) * ny + y) * nx + x;
  }
  bool same_dims(const VolumeGeometry& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz;
  }
};

// Frame-major 4D volume: frame 0 fully, then frame 1, ...; within a frame
// x varies fastest, then y, then z. Payload is float32, matching the file.
struct Volume4D {
  VolumeGeometry geometry;
  uint32_t nt = 1;
  std::vector<float> voxels;  // nx*ny*nz*nt

  float at(uint32_t x, uint32_t y, uint32_t z, uint32_t t) const {
    return voxels[std::size_t(t) * geometry.voxel_count() + geometry.linear(x, y, z)];
  }
  float& at(uint32_t x, uint32_t y, uint32_t z, uint32_t t) {
    return voxels[std::size_t(t) * geometry.voxel_count() + geometry.linear(x, y, z)];
  }
};

struct LabelVolume {
  VolumeGeometry geometry;
  std::vector<uint32_t> labels;  // 0 = background

  uint32_t max_label() const;
};

struct MaskVolume {
  VolumeGeometry geometry;
  std::vector<uint8_t> flags;

  std::size_t count() const;
};

// ---------------------------------------------------------------------------
// F4D container. One fixed little-endian layout for series, label and mask
// volumes:
//
//   offset  size  field
//   0       8     magic "F4DV0001"
//   8       4     u32 nx
//   12      4     u32 ny
//   16      4     u32 nz
//   20      4     u32 nt
//   24      4     f32 dx (mm)
//   28      4     f32 dy (mm)
//   32      4     f32 dz (mm)
//   36      4     f32 tr (s)
//   40      1     u8 kind: 0 = series, 1 = labels, 2 = mask
//   41      -     nx*ny*nz*nt float32 payload, frame-major, x fastest
//
// A 1x1x1x1 volume is a 45-byte file (41-byte header + one float32).
// ---------------------------------------------------------------------------

enum class VolumeKind : uint8_t { Series = 0, Labels = 1, Mask = 2 };

constexpr std::size_t kF4dHeaderBytes = 41;

// Reads any F4D volume; the kind tag is reported through kind_out when given.
Volume4D read_f4d(const std::string& path, VolumeKind* kind_out = nullptr);
// Label payloads must be non-negative integers, mask payloads 0.0/1.0;
// enforced here as well as on read.
void write_f4d(const Volume4D& v, const std::string& path,
               VolumeKind kind = VolumeKind::Series);

// Labels and masks use the same container with nt = 1; labels are stored as
// float32 integers (checked within 1e-6 on read), masks as 0.0/1.0.
LabelVolume read_labels(const std::string& path);
void write_labels(const LabelVolume& v, const std::string& path);
MaskVolume read_mask(const std::string& path);
void write_mask(const MaskVolume& v, const std::string& path);

LabelVolume labels_from_volume(const Volume4D& v);
MaskVolume mask_from_volume(const Volume4D& v);
Volume4D volume_from_labels(const LabelVolume& v);
Volume4D volume_from_mask(const MaskVolume& v);

// CSV with '.' decimal separator, '\n' line endings and shortest
// round-trip decimal formatting; one row per cluster.
void write_centroids_csv(const std::vector<std::vector<double>>& rows,
                         const std::string& path, bool header = false);

std::string format_shortest(double v);

// ---------------------------------------------------------------------------
// Hierarchy tree (see docs/FORMATS.md for the JSON schema).
// ---------------------------------------------------------------------------

struct HierarchyNode {
  int id = 0;
  int stage = 0;                 // depth in the tree; root is 0
  int parent = -1;               // -1 for the root
  int child_a = -1, child_b = -1;
  bool converged = false;
  std::size_t voxel_count = 0;
  TimeSeries centroid;           // mean of member raw series
  std::optional<double> split_child_correlation;
  int cluster_number = 0;        // pre-merge cluster number; 0 if not a leaf
};

struct HierarchyTree {
  std::vector<HierarchyNode> nodes;  // nodes[i].id == i
  double ct = 0.0;
  int ns = 0;
  // Post-merge composition: final_clusters[k] lists the converged leaf node
  // ids making up final label k+1.
  std::vector<std::vector<int>> final_clusters;
};

std::string tree_to_json(const HierarchyTree& tree);
HierarchyTree tree_from_json(const std::string& json_text);
void write_tree_json(const HierarchyTree& tree, const std::string& path);
HierarchyTree read_tree_json(const std::string& path);

void write_text_file(const std::string& path, const std::string& body);
std::string read_text_file(const std::string& path);

}  // namespace mskm
