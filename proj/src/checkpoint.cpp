#include "art/checkpoint.hpp"

#include "art/errors.hpp"
#include "art/util.hpp"

#include <sstream>

namespace art {

void Checkpoint::add(const std::string& name, const diff::Shape& shape,
                     const std::vector<double>& data) {
    if (data.size() != diff::numel(shape))
        throw ShapeError("checkpoint tensor '" + name + "': data size mismatch");
    tensors.push_back({name, shape, data});
}

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const Checkpoint::Entry& Checkpoint::require(const std::string& name) const {
    const Entry* e = find(name);
    if (!e) throw ParseError("checkpoint is missing tensor '" + name + "'");
    return *e;
}

std::int64_t Checkpoint::meta_or(const std::string& key, std::int64_t fallback) const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
}

std::string Checkpoint::serialize() const {
    std::ostringstream out;
    out << "artckpt 1\n";
    out << "meta " << meta.size() << "\n";
    for (const auto& [k, v] : meta) out << k << " " << v << "\n";
    for (const auto& t : tensors) {
        out << "tensor " << t.name << " " << t.shape.size();
        for (int d : t.shape) out << " " << d;
        out << "\n";
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            out << fmt_g17(t.data[i]);
            out << ((i % 8 == 7 || i + 1 == t.data.size()) ? "\n" : " ");
        }
    }
    out << "end\n";
    return out.str();
}

Checkpoint Checkpoint::parse(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    auto fail = [&](const std::string& what) -> ParseError {
        return ParseError("checkpoint '" + origin + "': " + what);
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "artckpt" || version != 1)
        throw fail("bad header (expected 'artckpt 1')");
    Checkpoint ck;
    std::string tok;
    if (!(in >> tok) || tok != "meta") throw fail("expected 'meta'");
    std::size_t n_meta = 0;
    if (!(in >> n_meta)) throw fail("bad meta count");
    for (std::size_t i = 0; i < n_meta; ++i) {
        std::string key;
        std::int64_t value;
        if (!(in >> key >> value)) throw fail("bad meta entry");
        ck.meta[key] = value;
    }
    while (in >> tok) {
        if (tok == "end") return ck;
        if (tok != "tensor") throw fail("unexpected token '" + tok + "'");
        Entry e;
        std::size_t rank = 0;
        if (!(in >> e.name >> rank)) throw fail("bad tensor header");
        e.shape.resize(rank);
        for (auto& d : e.shape)
            if (!(in >> d) || d < 0) throw fail("bad dimension in tensor '" + e.name + "'");
        e.data.resize(diff::numel(e.shape));
        for (auto& v : e.data)
            if (!(in >> v)) throw fail("truncated data in tensor '" + e.name + "'");
        ck.tensors.push_back(std::move(e));
    }
    throw fail("missing 'end'");
}

void Checkpoint::save(const std::string& path) const { atomic_write(path, serialize()); }

Checkpoint Checkpoint::load(const std::string& path) {
    return parse(read_file(path), path);
}

} // namespace art
