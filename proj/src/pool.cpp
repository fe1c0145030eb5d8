#include "dispo/pool.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dispo/errors.hpp"
#include "dispo/rng.hpp"

namespace dispo {

namespace {

constexpr std::array<std::string_view, kElementCount> kElementNames{"Event", "Style", "Character", "Setting"};

}  // namespace

std::string_view element_name(Element e) noexcept { return kElementNames[static_cast<std::size_t>(e)]; }

std::optional<Element> parse_element(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kElementNames.size(); ++i) {
        if (kElementNames[i] == name) return static_cast<Element>(i);
    }
    return std::nullopt;
}

std::vector<int> ConstraintPool::ids() const {
    std::vector<int> out;
    out.reserve(constraints.size());
    for (const auto& c : constraints) out.push_back(c.id);
    return out;
}

const Constraint& ConstraintPool::by_id(int id) const {
    if (contains(id)) {
        const auto& guess = constraints[static_cast<std::size_t>(id - 1)];
        if (guess.id == id) return guess;
        for (const auto& c : constraints) {
            if (c.id == id) return c;
        }
    }
    throw PoolError("no constraint with id " + std::to_string(id));
}

void validate_pool(const ConstraintPool& pool) {
    if (pool.constraints.empty()) throw PoolError("pool is empty");

    std::set<int> seen;
    for (const auto& c : pool.constraints) {
        if (!seen.insert(c.id).second) throw PoolError("duplicate constraint id " + std::to_string(c.id));
        if (c.text.empty()) throw PoolError("constraint " + std::to_string(c.id) + " has empty text");
    }
    const int n = static_cast<int>(pool.constraints.size());
    if (*seen.begin() != 1 || *seen.rbegin() != n) {
        throw PoolError("constraint ids must form the contiguous range 1.." + std::to_string(n));
    }

    if (!pool.canonical) return;

    if (pool.constraints.size() != kCanonicalPoolSize) {
        throw PoolError("canonical pool must hold " + std::to_string(kCanonicalPoolSize) + " constraints, found " +
                        std::to_string(pool.constraints.size()));
    }
    std::array<std::map<std::string, std::size_t>, kElementCount> per_category;
    for (const auto& c : pool.constraints) ++per_category[static_cast<std::size_t>(c.element)][c.category];
    for (std::size_t e = 0; e < kElementCount; ++e) {
        const auto element = std::string(kElementNames[e]);
        if (per_category[e].size() != kCanonicalCategoriesPerElement) {
            throw PoolError("element " + element + " has " + std::to_string(per_category[e].size()) +
                            " categories, expected " + std::to_string(kCanonicalCategoriesPerElement));
        }
        for (const auto& [category, count] : per_category[e]) {
            if (count != kCanonicalConstraintsPerCategory) {
                throw PoolError("category " + element + "/" + category + " has " + std::to_string(count) +
                                " constraints, expected " + std::to_string(kCanonicalConstraintsPerCategory));
            }
        }
    }
}

ConstraintPool pool_from_json(const nlohmann::json& doc) {
    ConstraintPool pool;
    try {
        pool.name = doc.at("name").get<std::string>();
        pool.version = doc.at("version").get<std::string>();
        pool.canonical = doc.value("canonical", true);
        for (const auto& item : doc.at("constraints")) {
            Constraint c;
            c.id = item.at("id").get<int>();
            const auto element = item.at("element").get<std::string>();
            const auto parsed = parse_element(element);
            if (!parsed) throw ParseError("constraint " + std::to_string(c.id) + ": unknown element '" + element + "'");
            c.element = *parsed;
            c.category = item.at("category").get<std::string>();
            c.text = item.at("text").get<std::string>();
            pool.constraints.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pool document: ") + e.what());
    }
    validate_pool(pool);
    return pool;
}

nlohmann::json pool_to_json(const ConstraintPool& pool) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& c : pool.constraints) {
        items.push_back({{"id", c.id},
                         {"element", std::string(element_name(c.element))},
                         {"category", c.category},
                         {"text", c.text}});
    }
    return {{"name", pool.name}, {"version", pool.version}, {"canonical", pool.canonical}, {"constraints", items}};
}

ConstraintPool load_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open pool file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("pool file " + path.string() + ": " + e.what());
    }
    return pool_from_json(doc);
}

void write_pool(const ConstraintPool& pool, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write pool file " + path.string());
    out << pool_to_json(pool).dump(2) << '\n';
}

ConstraintPool placeholder_pool() {
    static constexpr std::array<std::array<std::string_view, 5>, kElementCount> categories{{
        {"Inciting Incident", "Reversal", "Escalation", "Revelation", "Resolution"},
        {"Narrative Voice", "Tone", "Pacing", "Imagery", "Structure"},
        {"Motivation", "Flaw", "Relationship", "Transformation", "Archetype"},
        {"Era", "Place", "Social Order", "Atmosphere", "World Rules"},
    }};
    static constexpr std::array<std::string_view, 10> subjects{"lorem", "ipsum", "dolor", "amet", "tempor",
                                                                "magna", "velit", "nulla", "fugiat", "minim"};
    static constexpr std::array<std::string_view, 10> verbs{"shapes", "frames", "bends", "anchors", "echoes",
                                                             "splits", "guides", "veils", "turns", "binds"};
    static constexpr std::array<std::string_view, 10> objects{"the opening", "the middle", "the ending",
                                                               "each scene", "the reader", "the stakes",
                                                               "the rhythm", "the silence", "the focus",
                                                               "the frame"};

    ConstraintPool pool;
    pool.name = "placeholder";
    pool.version = "1";
    pool.canonical = true;
    int id = 1;
    for (std::size_t e = 0; e < kElementCount; ++e) {
        for (std::size_t cat = 0; cat < categories[e].size(); ++cat) {
            for (std::size_t k = 0; k < kCanonicalConstraintsPerCategory; ++k) {
                std::ostringstream text;
                text << "Placeholder " << categories[e][cat] << " constraint: " << subjects[k] << ' '
                     << verbs[(k + cat) % verbs.size()] << ' ' << objects[(k + 3 * cat + e) % objects.size()] << '.';
                pool.constraints.push_back(
                    {id++, static_cast<Element>(e), std::string(categories[e][cat]), text.str()});
            }
        }
    }
    return pool;
}

Permutation permute(const ConstraintPool& pool, std::uint64_t seed) {
    Permutation p{seed, pool.ids()};
    Rng rng(seed);
    rng.shuffle(std::span<int>(p.order));
    return p;
}

}  // namespace dispo
