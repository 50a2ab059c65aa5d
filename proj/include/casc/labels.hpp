#ifndef CASC_LABELS_HPP
#define CASC_LABELS_HPP

#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "casc/error.hpp"

namespace casc {

constexpr int eps_label = -1;
constexpr char const* eps_name = "<eps>";

struct label_set {

    std::vector<std::string> names;
    std::unordered_map<std::string, int> ids;

    int size() const
    {
        return int(names.size());
    }

    int add(std::string const& name)
    {
        auto it = ids.find(name);
        if (it != ids.end()) {
            return it->second;
        }
        int i = int(names.size());
        names.push_back(name);
        ids[name] = i;
        return i;
    }

    int id(std::string const& name) const
    {
        auto it = ids.find(name);
        if (it == ids.end()) {
            throw unmapped_label("unknown label: " + name);
        }
        return it->second;
    }

    bool has(std::string const& name) const
    {
        return ids.find(name) != ids.end();
    }

    std::string const& name(int i) const
    {
        if (i < 0 || i >= int(names.size())) {
            throw label_out_of_range("label id out of range: " + std::to_string(i));
        }
        return names[i];
    }

};

inline label_set load_labels(std::istream& is)
{
    label_set result;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        if (result.has(line)) {
            throw parse_error("duplicate label: " + line);
        }
        result.add(line);
    }
    return result;
}

inline void save_labels(std::ostream& os, label_set const& labels)
{
    for (auto& n : labels.names) {
        os << n << "\n";
    }
}

// Output labels of composed graphs are pairs (s1, s2) with s1 in
// {eps} union [0, k) and s2 in [0, k).  Pairs are packed above the
// plain label range: any code >= k is a pair.
inline int pair_label(int s1, int s2, int k)
{
    if (s1 < eps_label || s1 >= k || s2 < 0 || s2 >= k) {
        throw label_out_of_range("bad label pair: " + std::to_string(s1)
            + "," + std::to_string(s2));
    }
    return k + (s1 + 1) * k + s2;
}

inline bool is_pair_label(int code, int k)
{
    return code >= k;
}

inline int pair_first(int code, int k)
{
    return (code - k) / k - 1;
}

inline int pair_second(int code, int k)
{
    return (code - k) % k;
}

inline std::string format_label(int code, label_set const& labels)
{
    int k = labels.size();
    if (code == eps_label) {
        return eps_name;
    } else if (is_pair_label(code, k)) {
        int s1 = pair_first(code, k);
        int s2 = pair_second(code, k);
        return (s1 == eps_label ? std::string(eps_name) : labels.name(s1))
            + "|" + labels.name(s2);
    } else {
        return labels.name(code);
    }
}

inline int parse_label(std::string const& s, label_set const& labels)
{
    auto bar = s.find('|');
    if (bar == std::string::npos) {
        if (s == eps_name) {
            return eps_label;
        }
        return labels.id(s);
    }
    std::string first = s.substr(0, bar);
    std::string second = s.substr(bar + 1);
    int s1 = (first == eps_name ? eps_label : labels.id(first));
    int s2 = labels.id(second);
    return pair_label(s1, s2, labels.size());
}

}

#endif
