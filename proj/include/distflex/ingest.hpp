#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "distflex/types.hpp"

namespace distflex::ingest {

/// One dated shipment of `quantity` identical unit packages.
struct Transaction {
    Day date = 0;
    EntityId seller = kNoEntity;
    EntityId buyer = kNoEntity;
    ProductId product = 0;
    std::int64_t quantity = 0;
};

struct ProductRule {
    std::string ingredient;
    std::string form;
    std::string strength;
};

struct EquivalenceClass {
    std::string class_id;              // derived from the shared active ingredient
    std::vector<std::string> members;  // product codes, sorted
};

struct SynthSpec {
    std::uint32_t n_manufacturers = 4;
    std::uint32_t n_distributors = 30;
    std::uint32_t n_final_buyers = 120;
    std::uint32_t tiers = 2;          // distribution layers between manufacturers and buyers
    double overlap = 0.5;             // fraction of distributors shared by the two products
    double volume_scale = 400.0;      // median annual packages per (buyer, product)
    std::uint64_t seed = 1;
    std::uint32_t years = 1;          // consecutive observation years to emit
    std::uint32_t batches_per_year = 50;  // shipment waves per route per year
    int start_year = 2012;

    void validate() const;
};

struct SyntheticSystem {
    EntityCatalog catalog;
    Interner products;
    std::vector<Transaction> transactions;  // date-sorted, stable
    std::vector<std::string> product_codes;
    std::map<std::string, ProductRule> rules;
};

/// Parse the transaction CSV (`date,seller_id,buyer_id,product_code,quantity`).
/// Rows are validated against the catalog, then stably sorted by date so that
/// same-day rows keep input order. Product codes are interned into `products`.
std::vector<Transaction> parse_transactions(std::istream& in, const EntityCatalog& catalog,
                                            Interner& products);

void write_transactions(std::ostream& out, const std::vector<Transaction>& txs,
                        const EntityCatalog& catalog, const Interner& products);

EntityCatalog parse_catalog(std::istream& in);
void write_catalog(std::ostream& out, const EntityCatalog& catalog);

std::map<std::string, ProductRule> parse_rules(std::istream& in);
void write_rules(std::ostream& out, const std::map<std::string, ProductRule>& rules);

/// Group product codes into substitutability classes: same active ingredient,
/// strength and dosage form requirements relaxed. Classes partition the input.
std::vector<EquivalenceClass> group_substitutables(const std::vector<std::string>& products,
                                                   const std::map<std::string, ProductRule>& rules);

/// Deterministic tiered system generator. Guarantees ship-in >= ship-out per
/// distributor-year and custody-exact FIFO routes (see pathrec).
SyntheticSystem generate_synthetic_system(const SynthSpec& spec);

}  // namespace distflex::ingest
