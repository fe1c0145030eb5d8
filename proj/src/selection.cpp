#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dispo/errors.hpp"
#include "dispo/providers.hpp"

namespace dispo {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Marker lines may arrive wrapped in markdown emphasis or code ticks.
std::string marker_of(std::string_view line) {
    line = trim(line);
    while (!line.empty() && (line.front() == '*' || line.front() == '`' || line.front() == '#')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == '*' || line.back() == '`')) line.remove_suffix(1);
    std::string out(trim(line));
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string_view strip_bullet(std::string_view s) {
    s = trim(s);
    if (!s.empty() && (s.front() == '-' || s.front() == '*')) s = trim(s.substr(1));
    if (s.starts_with("\xE2\x80\xA2")) s = trim(s.substr(3));  // U+2022 bullet
    return s;
}

std::string_view strip_quotes(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

// "12", "[12]", "12.", "12)", "12: text", "[12] text" -> 12. Returns the
// remainder (text after the id) through `rest`.
std::optional<int> leading_id(std::string_view s, std::string_view* rest) {
    bool bracketed = false;
    if (!s.empty() && s.front() == '[') {
        bracketed = true;
        s.remove_prefix(1);
    }
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr == s.data()) return std::nullopt;
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    if (bracketed) {
        if (s.empty() || s.front() != ']') return std::nullopt;
        s.remove_prefix(1);
    }
    if (!s.empty()) {
        const char c = s.front();
        if (c == '.' || c == ')' || c == ':' || c == '-') {
            s.remove_prefix(1);
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            return std::nullopt;
        }
    }
    if (rest) *rest = trim(s);
    return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

}  // namespace

Prompt build_prompt(const ConstraintPool& pool, const Permutation& permutation, const std::string& system_prompt,
                    int budget) {
    std::ostringstream user;
    user << "Below is a pool of " << pool.size() << " narrative constraints. Read the full list, then select exactly "
         << budget
         << " constraints you consider most useful for planning a single fictional narrative. Give a brief "
            "justification for each selection, then assess how the selected constraints work together.\n\n"
         << "Constraints:\n";
    for (int id : permutation.order) {
        user << '[' << id << "] " << pool.by_id(id).text << '\n';
    }
    user << "\nAnswer using exactly this format:\n"
         << "SELECTIONS:\n<one constraint id per line, " << budget << " lines>\nEND_SELECTIONS\n"
         << "JUSTIFICATIONS:\n<id>: <brief justification>\nEND_JUSTIFICATIONS\n"
         << "COMPATIBILITY:\n<final compatibility assessment>\n";
    return {system_prompt, user.str()};
}

void validate_selection(const std::vector<int>& ids, const ConstraintPool& pool, int budget) {
    for (int id : ids) {
        if (!pool.contains(id)) {
            throw SelectionError(SelectionError::Kind::out_of_pool_id, "out-of-pool id " + std::to_string(id));
        }
    }
    std::set<int> seen;
    for (int id : ids) {
        if (!seen.insert(id).second) {
            throw SelectionError(SelectionError::Kind::duplicate_id, "duplicate id " + std::to_string(id));
        }
    }
    if (ids.size() != static_cast<std::size_t>(budget)) {
        throw SelectionError(SelectionError::Kind::count_mismatch,
                             "selection count mismatch: expected " + std::to_string(budget) + ", got " +
                                 std::to_string(ids.size()));
    }
}

namespace {

SelectionResponse parse_selection_impl(const std::string& raw, const ConstraintPool& pool, int budget) {
    const auto lines = split_lines(raw);

    std::size_t begin = lines.size();
    std::size_t end = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (marker_of(lines[i]) == "SELECTIONS:") {
            begin = i + 1;
            break;
        }
    }
    for (std::size_t i = begin; i < lines.size(); ++i) {
        if (marker_of(lines[i]) == "END_SELECTIONS") {
            end = i;
            break;
        }
    }
    if (begin >= lines.size() || end >= lines.size()) {
        throw SelectionError(SelectionError::Kind::no_answer_block, "no SELECTIONS ... END_SELECTIONS block found");
    }

    std::unordered_map<std::string_view, int> by_text;
    for (const auto& c : pool.constraints) by_text.emplace(c.text, c.id);

    SelectionResponse response;
    response.raw_payload = raw;
    for (std::size_t i = begin; i < end; ++i) {
        const auto entry = strip_bullet(lines[i]);
        if (entry.empty()) continue;
        if (const auto id = leading_id(entry, nullptr)) {
            response.selected.push_back(*id);
            continue;
        }
        const auto text = strip_quotes(entry);
        const auto hit = by_text.find(text);
        if (hit == by_text.end()) {
            throw SelectionError(SelectionError::Kind::unmatched_reference,
                                 "unmatched constraint reference: " + std::string(entry));
        }
        response.selected.push_back(hit->second);
    }

    std::map<int, std::string> justification_by_id;
    bool in_justifications = false;
    std::optional<std::size_t> compatibility_start;
    for (std::size_t i = end + 1; i < lines.size(); ++i) {
        const auto marker = marker_of(lines[i]);
        if (marker == "JUSTIFICATIONS:") {
            in_justifications = true;
        } else if (marker == "END_JUSTIFICATIONS") {
            in_justifications = false;
        } else if (marker == "COMPATIBILITY:") {
            compatibility_start = i + 1;
            break;
        } else if (in_justifications) {
            std::string_view rest;
            if (const auto id = leading_id(strip_bullet(lines[i]), &rest)) justification_by_id[*id] = std::string(rest);
        }
    }
    if (compatibility_start) {
        std::string text;
        for (std::size_t i = *compatibility_start; i < lines.size(); ++i) {
            if (marker_of(lines[i]) == "END_COMPATIBILITY") break;
            if (!text.empty()) text += '\n';
            text += lines[i];
        }
        response.compatibility = std::string(trim(text));
    }

    validate_selection(response.selected, pool, budget);

    for (int id : response.selected) {
        const auto it = justification_by_id.find(id);
        response.justifications.push_back(it == justification_by_id.end() ? std::string{} : it->second);
    }
    return response;
}

}  // namespace

SelectionResponse parse_selection(const std::string& raw, const ConstraintPool& pool, int budget) {
    try {
        return parse_selection_impl(raw, pool, budget);
    } catch (SelectionError& e) {
        e.set_raw_payload(raw);
        throw;
    }
}

}  // namespace dispo
