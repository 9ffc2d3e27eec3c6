#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mlti/system.hpp"

namespace mlti::io {

/// Text tensor format: line 1 "tensor v1", line 2 space-separated extents
/// (empty for an order-0 scalar), then entries in ivec order.
void write_tensor_text(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor_text(const std::filesystem::path& path);

/// Binary format: magic "MLTIT1", u32 order, u64 extents, little-endian f64
/// payload in ivec order.
void write_tensor_binary(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor_binary(const std::filesystem::path& path);

/// Paired text format: header line "paired N J1 I1 ... JN IN" followed by
/// the interleaved tensor in the text format.
void write_paired_text(const std::filesystem::path& path, const EvenPairedTensor& t);
EvenPairedTensor read_paired_text(const std::filesystem::path& path);

/// Factored formats: a JSON manifest holding the rank data plus one tensor
/// file per component/core next to it.
void write_gen_cpd(const std::filesystem::path& manifest, const GenCpFactors& f);
GenCpFactors read_gen_cpd(const std::filesystem::path& manifest);
void write_gen_ttd(const std::filesystem::path& manifest, const GenTtCores& t);
GenTtCores read_gen_ttd(const std::filesystem::path& manifest);

/// System manifest: JSON naming the A, B, C files and their kinds
/// ("paired", "gen_cpd" or "gen_ttd"); paths are relative to the manifest.
struct SystemManifest {
    std::string name;
    struct Entry {
        std::string kind;
        std::string path;
    };
    Entry a, b, c;
    // Shape metadata (informational; validated against the tensors on load).
    std::vector<Index> state_shape, input_shape, output_shape;
};

SystemManifest read_system_manifest(const std::filesystem::path& path);
void write_system_manifest(const std::filesystem::path& path, const SystemManifest& m);

/// Load a system, reconstructing factored entries to full Einstein form.
MltiSystem load_system(const std::filesystem::path& manifest);

/// Load the factored form when every entry is factored.
std::optional<FactoredMltiSystem> load_factored_system(const std::filesystem::path& manifest);

/// Write a dense system as <name>.{A,B,C}.mlt plus <name>.json in dir;
/// returns the manifest path.
std::filesystem::path save_dense_system(const std::filesystem::path& dir, const std::string& name,
                                        const MltiSystem& s);

/// Write a factored system (one factored manifest per tensor) plus manifest.
std::filesystem::path save_factored_system(const std::filesystem::path& dir,
                                           const std::string& name, const FactoredMltiSystem& f);

} // namespace mlti::io
