#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "she/errors.hpp"

namespace she {

// Tokenized `name[:key=value][,key=value]*` text used by the kernel,
// coefficient and lattice grammars.
struct SpecText {
    struct Param {
        std::string key;
        std::string value;
        std::size_t position;
        bool used = false;
    };

    std::string name;
    std::vector<Param> params;

    static SpecText parse(std::string_view text) {
        SpecText out;
        std::size_t i = 0;
        auto is_space = [](char c) { return c == ' ' || c == '\t'; };
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t name_begin = i;
        while (i < text.size() && text[i] != ':' && text[i] != ',') ++i;
        std::size_t name_end = i;
        while (name_end > name_begin && is_space(text[name_end - 1])) --name_end;
        out.name = std::string(text.substr(name_begin, name_end - name_begin));
        if (out.name.empty()) throw SpecError("empty spec name", name_begin);
        if (i < text.size()) ++i;
        while (i < text.size()) {
            const std::size_t begin = i;
            while (i < text.size() && text[i] != ',') ++i;
            std::string_view item = text.substr(begin, i - begin);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw SpecError("expected key=value in '" + std::string(text) + "'", begin);
            auto trim = [](std::string_view s) {
                while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
                while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
                return std::string(s);
            };
            out.params.push_back({trim(item.substr(0, eq)), trim(item.substr(eq + 1)), begin});
            if (i < text.size()) ++i;
        }
        return out;
    }

    Param* find(std::string_view key) {
        for (auto& p : params)
            if (p.key == key) {
                p.used = true;
                return &p;
            }
        return nullptr;
    }

    double number(std::string_view key) {
        auto* p = find(key);
        if (!p) throw SpecError("missing parameter '" + std::string(key) + "' for '" + name + "'");
        return to_double(*p);
    }

    double number_or(std::string_view key, double fallback) {
        auto* p = find(key);
        return p ? to_double(*p) : fallback;
    }

    std::string string(std::string_view key) {
        auto* p = find(key);
        if (!p) throw SpecError("missing parameter '" + std::string(key) + "' for '" + name + "'");
        return p->value;
    }

    // Every key must have been consumed; unknown keys are errors.
    void finish() const {
        for (const auto& p : params)
            if (!p.used) throw SpecError("unknown parameter '" + p.key + "' for '" + name + "'", p.position);
    }

private:
    static double to_double(const Param& p) {
        double v = 0;
        const char* first = p.value.data();
        const char* last = first + p.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || p.value.empty())
            throw SpecError("parameter '" + p.key + "' is not a number: '" + p.value + "'", p.position);
        return v;
    }
};

}  // namespace she
