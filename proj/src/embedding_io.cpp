#include "coreselect/embedding_io.hpp"

#include "coreselect/binary.hpp"
#include "coreselect/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace coreselect {

using json = nlohmann::json;

EmbeddingFormat parse_format(const std::string& name) {
    if (name == "csv") return EmbeddingFormat::csv;
    if (name == "binary") return EmbeddingFormat::binary;
    fail(Errc::config, "unknown embedding format '" + name + "' (expected csv or binary)");
}

const char* format_name(EmbeddingFormat format) noexcept {
    return format == EmbeddingFormat::csv ? "csv" : "binary";
}

EmbeddingFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string line_ref(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

EmbeddingMatrix read_embeddings_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), Errc::format, "line 1: missing CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    require(header.size() >= 3 && header[0] == "id" && header[1] == "label", Errc::format,
            "line 1: header must be id,label,f0,...");
    const std::size_t dim = header.size() - 2;
    for (std::size_t j = 0; j < dim; ++j) {
        require(header[j + 2] == "f" + std::to_string(j), Errc::format,
                "line 1: expected column f" + std::to_string(j) + ", found '" + std::string(header[j + 2]) +
                    "'");
    }

    std::vector<SampleId> ids;
    std::vector<ClassIndex> labels;
    std::vector<double> values;
    std::vector<std::string> class_names;
    std::unordered_map<std::string, ClassIndex> class_lookup;

    std::size_t line_no = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split_fields(line);
        require(fields.size() == dim + 2, Errc::format,
                line_ref(line_no) + ": expected " + std::to_string(dim + 2) + " fields, found " +
                    std::to_string(fields.size()));

        std::uint64_t id = 0;
        auto [idp, idec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
        require(idec == std::errc{} && idp == fields[0].data() + fields[0].size(), Errc::format,
                line_ref(line_no) + ": invalid id '" + std::string(fields[0]) + "'");
        ids.push_back(static_cast<SampleId>(id));

        std::string label(fields[1]);
        require(is_valid_class_name(label), Errc::format,
                line_ref(line_no) + ": invalid label '" + label + "'");
        auto [it, inserted] = class_lookup.emplace(label, static_cast<ClassIndex>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);

        for (std::size_t j = 0; j < dim; ++j) {
            const auto f = fields[j + 2];
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            require(ec == std::errc{} && p == f.data() + f.size(), Errc::format,
                    line_ref(line_no) + ": invalid number '" + std::string(f) + "' in column f" +
                        std::to_string(j));
            require(std::isfinite(v), Errc::data,
                    "non-finite value at (" + std::to_string(row) + ", f" + std::to_string(j) + ")");
            values.push_back(v);
        }
    }
    require(!ids.empty(), Errc::format, "CSV has a header but no data rows");
    const std::size_t n = ids.size();
    return EmbeddingMatrix(std::move(ids), std::move(labels), Matrix(n, dim, std::move(values)),
                           std::move(class_names));
}

void write_embeddings_csv(std::ostream& out, const EmbeddingMatrix& m) {
    out << "id,label";
    for (std::size_t j = 0; j < m.dim(); ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << to_u64(m.ids()[i]) << ',' << m.class_names()[m.labels()[i]];
        for (double v : m.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

EmbeddingMatrix read_embeddings_binary(std::istream& in) {
    using namespace binary;
    expect_magic(in, "CSEL");
    const auto version = read_le<std::uint16_t>(in, "version");
    require(version == kEmbeddingFormatVersion, Errc::format,
            "unsupported embedding format version " + std::to_string(version));
    const auto n = read_le<std::uint64_t>(in, "row count");
    const auto dim = read_le<std::uint32_t>(in, "dimension");
    require(n >= 1 && dim >= 1, Errc::format, "embedding file declares an empty matrix");
    require(n <= (std::uint64_t{1} << 40) / dim, Errc::format, "implausible embedding size");

    std::vector<SampleId> ids(n);
    for (auto& id : ids) id = static_cast<SampleId>(read_le<std::uint64_t>(in, "ids"));
    std::vector<ClassIndex> labels(n);
    for (auto& label : labels) label = read_le<std::uint32_t>(in, "labels");
    const auto name_count = read_le<std::uint32_t>(in, "label-name count");
    require(name_count <= (1u << 24), Errc::format, "implausible label-name count");
    std::vector<std::string> names;
    names.reserve(name_count);
    for (std::uint32_t i = 0; i < name_count; ++i) names.push_back(read_string(in, "label names"));

    std::vector<double> values(n * dim);
    for (auto& v : values) v = read_f64(in, "values");
    return EmbeddingMatrix(std::move(ids), std::move(labels), Matrix(n, dim, std::move(values)),
                           std::move(names));
}

void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& m) {
    using namespace binary;
    out.write("CSEL", 4);
    write_le(out, kEmbeddingFormatVersion);
    write_le(out, static_cast<std::uint64_t>(m.size()));
    write_le(out, static_cast<std::uint32_t>(m.dim()));
    for (SampleId id : m.ids()) write_le(out, to_u64(id));
    for (ClassIndex c : m.labels()) write_le(out, static_cast<std::uint32_t>(c));
    write_le(out, static_cast<std::uint32_t>(m.class_count()));
    for (const auto& name : m.class_names()) write_string(out, name);
    for (double v : m.data().values()) write_f64(out, v);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    std::ifstream in(path, format == EmbeddingFormat::binary ? std::ios::binary : std::ios::in);
    require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
    try {
        return format == EmbeddingFormat::csv ? read_embeddings_csv(in) : read_embeddings_binary(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, EmbeddingFormat format) {
    std::ofstream out(path, format == EmbeddingFormat::binary ? std::ios::binary : std::ios::out);
    require(out.good(), Errc::io, "cannot write '" + path.string() + "'");
    if (format == EmbeddingFormat::csv)
        write_embeddings_csv(out, m);
    else
        write_embeddings_binary(out, m);
    out.flush();
    require(out.good(), Errc::io, "write failed for '" + path.string() + "'");
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open manifest '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
        Manifest m;
        m.name = j.at("name").get<std::string>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.embedding_path = j.at("embedding_path").get<std::string>();
        m.format = parse_format(j.value("format", std::string("binary")));
        m.dim = j.at("dim").get<std::size_t>();
        m.count = j.at("count").get<std::size_t>();
        m.provenance = j.value("provenance", std::string());
        return m;
    } catch (const json::exception& e) {
        fail(Errc::config, "manifest '" + path.string() + "': " + e.what());
    }
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    json j = {
        {"name", manifest.name},
        {"class_names", manifest.class_names},
        {"embedding_path", manifest.embedding_path},
        {"format", format_name(manifest.format)},
        {"dim", manifest.dim},
        {"count", manifest.count},
        {"provenance", manifest.provenance},
    };
    std::ofstream out(path);
    require(out.good(), Errc::io, "cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

EmbeddingMatrix load_manifest_embeddings(const std::filesystem::path& manifest_path) {
    const Manifest manifest = load_manifest(manifest_path);
    std::filesystem::path embedding_path = manifest.embedding_path;
    if (embedding_path.is_relative()) embedding_path = manifest_path.parent_path() / embedding_path;
    EmbeddingMatrix m = load_embeddings(embedding_path, manifest.format);

    require(m.size() == manifest.count, Errc::consistency,
            "manifest count " + std::to_string(manifest.count) + " but file has " + std::to_string(m.size()));
    require(m.dim() == manifest.dim, Errc::consistency,
            "manifest dim " + std::to_string(manifest.dim) + " but file has " + std::to_string(m.dim()));
    if (manifest.class_names.empty() || manifest.class_names == m.class_names()) return m;

    // Re-index labels into the manifest's class order.
    std::unordered_map<std::string, ClassIndex> lookup;
    for (std::size_t c = 0; c < manifest.class_names.size(); ++c)
        lookup.emplace(manifest.class_names[c], static_cast<ClassIndex>(c));
    std::vector<ClassIndex> labels;
    labels.reserve(m.size());
    for (ClassIndex c : m.labels()) {
        auto it = lookup.find(m.class_names()[c]);
        require(it != lookup.end(), Errc::consistency,
                "label '" + m.class_names()[c] + "' missing from manifest class list");
        labels.push_back(it->second);
    }
    return EmbeddingMatrix(m.ids(), std::move(labels), m.data(), manifest.class_names);
}

}  // namespace coreselect
