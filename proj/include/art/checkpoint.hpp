#pragma once

#include "art/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace art {

// Self-describing text container for named parameter arrays. Layout (all
// whitespace-separated, documented in the README and stable across versions):
//
//   artckpt 1
//   meta <count>
//   <key> <int64>            (count lines, sorted by key)
//   tensor <name> <rank> <dim...>
//   <values, %.17g>          (repeated per tensor, 8 values per line)
//   end
//
// %.17g round-trips IEEE doubles exactly, so save/load is lossless.
struct Checkpoint {
    struct Entry {
        std::string name;
        diff::Shape shape;
        std::vector<double> data;
    };

    std::map<std::string, std::int64_t> meta;
    std::vector<Entry> tensors;

    void add(const std::string& name, const diff::Shape& shape, const std::vector<double>& data);
    const Entry* find(const std::string& name) const;
    const Entry& require(const std::string& name) const;
    std::int64_t meta_or(const std::string& key, std::int64_t fallback) const;

    std::string serialize() const;
    static Checkpoint parse(const std::string& text, const std::string& origin);

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace art
