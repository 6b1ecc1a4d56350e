#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace distflex {

using EntityId = std::uint32_t;
using ProductId = std::uint32_t;

constexpr EntityId kNoEntity = std::numeric_limits<EntityId>::max();

// Reserved id 0: the virtual production source used for degenerate tensor
// rows and manufacturer order targets. Interners hand out ids starting at 1.
constexpr EntityId kSourceEntity = 0;
inline constexpr std::string_view kSourceName = "__source__";

enum class Role : std::uint8_t { Manufacturer, Distributor, FinalBuyer };

std::string_view role_name(Role r);
Role parse_role(std::string_view text);  // accepts "final_buyer" and "final-buyer"

// Errors map onto CLI exit codes: validation -> 1, numerical -> 2, io -> 3.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bidirectional string <-> dense id table. Id 0 is pre-bound to the
/// reserved production-source symbol so tensor code can use it freely.
class Interner {
  public:
    Interner() {
        names_.emplace_back(kSourceName);
        index_.emplace(std::string(kSourceName), kSourceEntity);
    }

    std::uint32_t intern(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), id);
        return id;
    }

    // Lookup without inserting; kNoEntity if absent.
    std::uint32_t find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? kNoEntity : it->second;
    }

    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct EntityCatalog {
    Interner ids;
    std::vector<Role> roles;  // indexed by EntityId; roles[0] unused

    EntityId add(std::string_view name, Role role) {
        EntityId id = ids.intern(name);
        if (id >= roles.size()) roles.resize(id + 1, Role::Distributor);
        roles[id] = role;
        return id;
    }
    bool contains(std::string_view name) const { return ids.find(name) != kNoEntity; }
    Role role(EntityId id) const { return roles.at(id); }
    bool is_manufacturer(EntityId id) const { return roles.at(id) == Role::Manufacturer; }
    bool is_final_buyer(EntityId id) const { return roles.at(id) == Role::FinalBuyer; }
    std::size_t entity_count() const { return ids.size() > 0 ? ids.size() - 1 : 0; }
};

// Calendar days are plain integers (days since 1970-01-01). The simulation
// clock is daily, so nothing finer is carried around.
using Day = std::int32_t;

Day day_from_ymd(int year, int month, int day);
void ymd_from_day(Day z, int& year, int& month, int& day);
Day parse_iso_date(std::string_view text);  // "YYYY-MM-DD"
std::string format_iso_date(Day d);
int year_of_day(Day d);

}  // namespace distflex
