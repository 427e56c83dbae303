#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "posedist/symmodel.hpp"

namespace posedist {

using Json = nlohmann::json;

Json symmetry_to_json(const SymmetrySpec& s);
SymmetrySpec symmetry_from_json(const Json& j);

Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);
Json camera_to_json(const CameraIntrinsics& k);
CameraIntrinsics camera_from_json(const Json& j);

/// Binary model file: 8-byte magic, u32 version, u64 header length, JSON
/// header, then little-endian float64 / int32 arrays in header order.
void save_model(const SymModel& model, const std::filesystem::path& path);
SymModel load_model(const std::filesystem::path& path);

/// Content hash over points, descriptors, frames and the mesh.
std::uint64_t model_hash(const SymModel& model);

std::string hex64(std::uint64_t v);

}  // namespace posedist
