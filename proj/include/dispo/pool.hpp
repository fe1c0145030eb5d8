#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dispo {

enum class Element { event, style, character, setting };

inline constexpr std::size_t kElementCount = 4;
inline constexpr std::size_t kCanonicalPoolSize = 200;
inline constexpr std::size_t kCanonicalCategoriesPerElement = 5;
inline constexpr std::size_t kCanonicalConstraintsPerCategory = 10;

std::string_view element_name(Element e) noexcept;
std::optional<Element> parse_element(std::string_view name) noexcept;

struct Constraint {
    int id = 0;
    Element element = Element::event;
    std::string category;
    std::string text;

    bool operator==(const Constraint&) const = default;
};

/// Ordered constraint list. File order is the canonical pre-permutation order;
/// ids are 1..N in some order.
struct ConstraintPool {
    std::string name;
    std::string version;
    bool canonical = true;
    std::vector<Constraint> constraints;

    [[nodiscard]] std::size_t size() const noexcept { return constraints.size(); }
    [[nodiscard]] std::vector<int> ids() const;
    [[nodiscard]] bool contains(int id) const noexcept { return id >= 1 && static_cast<std::size_t>(id) <= size(); }
    /// Constraint with the given id. Requires a validated pool.
    [[nodiscard]] const Constraint& by_id(int id) const;

    bool operator==(const ConstraintPool&) const = default;
};

/// Throws PoolError on duplicate ids, non-contiguous ids, empty text, or (for
/// canonical pools) a broken 4 x 5 x 10 structure.
void validate_pool(const ConstraintPool& pool);

ConstraintPool pool_from_json(const nlohmann::json& doc);
nlohmann::json pool_to_json(const ConstraintPool& pool);

ConstraintPool load_pool(const std::filesystem::path& path);
void write_pool(const ConstraintPool& pool, const std::filesystem::path& path);

/// Synthetic 200-constraint pool with the canonical structure and filler texts.
ConstraintPool placeholder_pool();

struct Permutation {
    std::uint64_t seed = 0;
    std::vector<int> order;

    bool operator==(const Permutation&) const = default;
};

/// Fisher-Yates shuffle of the pool ids (file order) driven by Rng(seed).
Permutation permute(const ConstraintPool& pool, std::uint64_t seed);

}  // namespace dispo
