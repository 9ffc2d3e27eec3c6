#include "mlti/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mlti::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_entry(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

DenseTensor read_tensor_body(std::istream& in, const fs::path& path) {
    std::string header;
    if (!std::getline(in, header) || header != "tensor v1")
        throw IoError(path.string() + ": expected 'tensor v1' header");
    std::string extent_line;
    if (!std::getline(in, extent_line)) throw IoError(path.string() + ": missing extents line");
    std::istringstream ext(extent_line);
    std::vector<Index> dims;
    Index d = 0;
    while (ext >> d) dims.push_back(d);
    Shape shape{std::move(dims)};
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(shape.count()));
    double v = 0.0;
    while (in >> v) data.push_back(v);
    if (static_cast<Index>(data.size()) != shape.count())
        throw IoError(path.string() + ": expected " + std::to_string(shape.count()) +
                      " entries, found " + std::to_string(data.size()));
    return DenseTensor(std::move(shape), std::move(data));
}

void write_tensor_body(std::ostream& out, const DenseTensor& t) {
    out << "tensor v1\n";
    const auto& dims = t.shape().dims();
    for (std::size_t k = 0; k < dims.size(); ++k) out << (k ? " " : "") << dims[k];
    out << "\n";
    for (Index i = 0; i < t.size(); ++i) out << format_entry(t[i]) << "\n";
}

json load_json(const fs::path& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return j;
}

} // namespace

void write_tensor_text(const fs::path& path, const DenseTensor& t) {
    auto out = open_out(path);
    write_tensor_body(out, t);
    if (!out) throw IoError("write failed: " + path.string());
}

DenseTensor read_tensor_text(const fs::path& path) {
    auto in = open_in(path);
    return read_tensor_body(in, path);
}

void write_tensor_binary(const fs::path& path, const DenseTensor& t) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write("MLTIT1", 6);
    const std::uint32_t order = static_cast<std::uint32_t>(t.order());
    out.write(reinterpret_cast<const char*>(&order), sizeof(order));
    for (Index d : t.shape().dims()) {
        const std::uint64_t e = static_cast<std::uint64_t>(d);
        out.write(reinterpret_cast<const char*>(&e), sizeof(e));
    }
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

DenseTensor read_tensor_binary(const fs::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, "MLTIT1", 6) != 0)
        throw IoError(path.string() + ": bad magic");
    std::uint32_t order = 0;
    in.read(reinterpret_cast<char*>(&order), sizeof(order));
    std::vector<Index> dims(order);
    for (auto& d : dims) {
        std::uint64_t e = 0;
        in.read(reinterpret_cast<char*>(&e), sizeof(e));
        d = static_cast<Index>(e);
    }
    if (!in) throw IoError(path.string() + ": truncated header");
    Shape shape{std::move(dims)};
    std::vector<double> data(static_cast<std::size_t>(shape.count()));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated payload");
    return DenseTensor(std::move(shape), std::move(data));
}

void write_paired_text(const fs::path& path, const EvenPairedTensor& t) {
    auto out = open_out(path);
    out << "paired " << t.order();
    for (const auto& [j, i] : t.pshape().pairs()) out << " " << j << " " << i;
    out << "\n";
    write_tensor_body(out, t.tensor());
    if (!out) throw IoError("write failed: " + path.string());
}

EvenPairedTensor read_paired_text(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    std::istringstream hdr(line);
    std::string tag;
    Index n = 0;
    hdr >> tag >> n;
    if (tag != "paired" || n < 1) throw IoError(path.string() + ": expected 'paired N' header");
    std::vector<std::pair<Index, Index>> pairs;
    for (Index k = 0; k < n; ++k) {
        Index j = 0, i = 0;
        if (!(hdr >> j >> i)) throw IoError(path.string() + ": incomplete pair extents");
        pairs.emplace_back(j, i);
    }
    PairedShape ps{std::move(pairs)};
    DenseTensor body = read_tensor_body(in, path);
    if (body.shape() != ps.interleaved())
        throw IoError(path.string() + ": tensor extents disagree with the paired header");
    return EvenPairedTensor(std::move(ps), std::move(body));
}

void write_gen_cpd(const fs::path& manifest, const GenCpFactors& f) {
    json j;
    j["format"] = "gen-cpd/1";
    j["kronecker_rank"] = f.kronecker_rank();
    json pairs = json::array();
    for (const auto& [jn, in] : f.pshape().pairs()) pairs.push_back({jn, in});
    j["pairs"] = pairs;
    json files = json::array();
    for (Index n = 1; n <= f.order(); ++n) {
        const std::string fname =
            manifest.stem().string() + ".component" + std::to_string(n) + ".mlt";
        write_tensor_text(manifest.parent_path() / fname,
                          f.components[static_cast<std::size_t>(n - 1)]);
        files.push_back(fname);
    }
    j["components"] = files;
    auto out = open_out(manifest);
    out << j.dump(2) << "\n";
}

GenCpFactors read_gen_cpd(const fs::path& manifest) {
    const json j = load_json(manifest);
    if (j.value("format", "") != "gen-cpd/1")
        throw IoError(manifest.string() + ": not a gen-cpd/1 manifest");
    GenCpFactors f;
    for (const auto& name : j.at("components"))
        f.components.push_back(
            read_tensor_text(manifest.parent_path() / name.get<std::string>()));
    for (const auto& c : f.components)
        if (c.order() != 3) throw IoError(manifest.string() + ": component is not order 3");
    return f;
}

void write_gen_ttd(const fs::path& manifest, const GenTtCores& t) {
    json j;
    j["format"] = "gen-ttd/1";
    j["ranks"] = t.ranks;
    json pairs = json::array();
    for (const auto& [jn, in] : t.pshape().pairs()) pairs.push_back({jn, in});
    j["pairs"] = pairs;
    json files = json::array();
    for (Index n = 1; n <= t.order(); ++n) {
        const std::string fname = manifest.stem().string() + ".core" + std::to_string(n) + ".mlt";
        write_tensor_text(manifest.parent_path() / fname,
                          t.cores[static_cast<std::size_t>(n - 1)]);
        files.push_back(fname);
    }
    j["cores"] = files;
    auto out = open_out(manifest);
    out << j.dump(2) << "\n";
}

GenTtCores read_gen_ttd(const fs::path& manifest) {
    const json j = load_json(manifest);
    if (j.value("format", "") != "gen-ttd/1")
        throw IoError(manifest.string() + ": not a gen-ttd/1 manifest");
    GenTtCores t;
    t.ranks = j.at("ranks").get<std::vector<Index>>();
    for (const auto& name : j.at("cores"))
        t.cores.push_back(read_tensor_text(manifest.parent_path() / name.get<std::string>()));
    for (const auto& c : t.cores)
        if (c.order() != 4) throw IoError(manifest.string() + ": core is not order 4");
    return t;
}

SystemManifest read_system_manifest(const fs::path& path) {
    const json j = load_json(path);
    if (j.value("format", "") != "mlti-system/1")
        throw IoError(path.string() + ": not an mlti-system/1 manifest");
    SystemManifest m;
    m.name = j.value("name", path.stem().string());
    if (j.contains("state_shape")) m.state_shape = j.at("state_shape").get<std::vector<Index>>();
    if (j.contains("input_shape")) m.input_shape = j.at("input_shape").get<std::vector<Index>>();
    if (j.contains("output_shape"))
        m.output_shape = j.at("output_shape").get<std::vector<Index>>();
    auto entry = [&](const char* key) {
        const json& e = j.at(key);
        return SystemManifest::Entry{e.at("kind").get<std::string>(),
                                     e.at("path").get<std::string>()};
    };
    m.a = entry("A");
    m.b = entry("B");
    m.c = entry("C");
    return m;
}

void write_system_manifest(const fs::path& path, const SystemManifest& m) {
    json j;
    j["format"] = "mlti-system/1";
    j["name"] = m.name;
    if (!m.state_shape.empty()) j["state_shape"] = m.state_shape;
    if (!m.input_shape.empty()) j["input_shape"] = m.input_shape;
    if (!m.output_shape.empty()) j["output_shape"] = m.output_shape;
    auto entry = [](const SystemManifest::Entry& e) {
        return json{{"kind", e.kind}, {"path", e.path}};
    };
    j["A"] = entry(m.a);
    j["B"] = entry(m.b);
    j["C"] = entry(m.c);
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

namespace {

EvenPairedTensor load_entry_full(const fs::path& dir, const SystemManifest::Entry& e) {
    const fs::path p = dir / e.path;
    if (e.kind == "paired") return read_paired_text(p);
    if (e.kind == "gen_cpd") return gen_cpd_to_full(read_gen_cpd(p));
    if (e.kind == "gen_ttd") return gen_ttd_to_full(read_gen_ttd(p));
    throw IoError("unknown tensor kind '" + e.kind + "' in system manifest");
}

std::optional<FactoredTensor> load_entry_factored(const fs::path& dir,
                                                  const SystemManifest::Entry& e) {
    const fs::path p = dir / e.path;
    if (e.kind == "gen_cpd") return FactoredTensor{read_gen_cpd(p)};
    if (e.kind == "gen_ttd") return FactoredTensor{read_gen_ttd(p)};
    return std::nullopt;
}

} // namespace

MltiSystem load_system(const fs::path& manifest) {
    const SystemManifest m = read_system_manifest(manifest);
    const fs::path dir = manifest.parent_path();
    MltiSystem sys(load_entry_full(dir, m.a), load_entry_full(dir, m.b),
                   load_entry_full(dir, m.c));
    if (!m.state_shape.empty() && m.state_shape != sys.state_shape().dims())
        throw IoError(manifest.string() + ": state shape metadata disagrees with the tensors");
    return sys;
}

std::optional<FactoredMltiSystem> load_factored_system(const fs::path& manifest) {
    const SystemManifest m = read_system_manifest(manifest);
    const fs::path dir = manifest.parent_path();
    auto a = load_entry_factored(dir, m.a);
    auto b = load_entry_factored(dir, m.b);
    auto c = load_entry_factored(dir, m.c);
    if (!a || !b || !c) return std::nullopt;
    return FactoredMltiSystem{std::move(*a), std::move(*b), std::move(*c)};
}

fs::path save_dense_system(const fs::path& dir, const std::string& name, const MltiSystem& s) {
    fs::create_directories(dir);
    SystemManifest m;
    m.name = name;
    m.state_shape = s.state_shape().dims();
    m.input_shape = s.input_shape().dims();
    m.output_shape = s.output_shape().dims();
    m.a = {"paired", name + ".A.mlt"};
    m.b = {"paired", name + ".B.mlt"};
    m.c = {"paired", name + ".C.mlt"};
    write_paired_text(dir / m.a.path, s.a);
    write_paired_text(dir / m.b.path, s.b);
    write_paired_text(dir / m.c.path, s.c);
    const fs::path manifest = dir / (name + ".json");
    write_system_manifest(manifest, m);
    return manifest;
}

fs::path save_factored_system(const fs::path& dir, const std::string& name,
                              const FactoredMltiSystem& f) {
    fs::create_directories(dir);
    SystemManifest m;
    m.name = name;
    m.state_shape = f.state_shape().dims();
    m.input_shape = factored_pshape(f.b).col_shape().dims();
    m.output_shape = factored_pshape(f.c).row_shape().dims();
    auto save_entry = [&](const FactoredTensor& t, const std::string& tag) {
        if (const auto* cp = std::get_if<GenCpFactors>(&t)) {
            const std::string fname = name + "." + tag + ".cpd.json";
            write_gen_cpd(dir / fname, *cp);
            return SystemManifest::Entry{"gen_cpd", fname};
        }
        const std::string fname = name + "." + tag + ".ttd.json";
        write_gen_ttd(dir / fname, std::get<GenTtCores>(t));
        return SystemManifest::Entry{"gen_ttd", fname};
    };
    m.a = save_entry(f.a, "A");
    m.b = save_entry(f.b, "B");
    m.c = save_entry(f.c, "C");
    const fs::path manifest = dir / (name + ".json");
    write_system_manifest(manifest, m);
    return manifest;
}

} // namespace mlti::io
