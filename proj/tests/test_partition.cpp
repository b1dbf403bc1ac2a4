#include "doctest.h"

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecolab/partition.hpp"

using namespace ecolab;

TEST_SUITE("partition") {

TEST_CASE("canonical form enforced") {
    CHECK_NOTHROW(Partition({0, 0, 1}));
    CHECK_NOTHROW(Partition({0, 1, 2}));
    CHECK_THROWS_AS(Partition({1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Partition({0, 2, 1}), std::invalid_argument);
    // The rejection suggests the canonical relabeling.
    try {
        Partition::parse("1,1,0");
        CHECK(false);
    } catch (const std::invalid_argument& ex) {
        CHECK(std::string(ex.what()).find("0,0,1") != std::string::npos);
    }
    CHECK(Partition::canonical(std::vector<int>{5, 5, 2}) == Partition({0, 0, 1}));
}

TEST_CASE("parse round trip") {
    const Partition p = Partition::parse("0,1,1,0,2");
    CHECK(p.to_string() == "0,1,1,0,2");
    CHECK(p.cell_count() == 3);
    CHECK_THROWS_AS(Partition::parse("0,x"), std::invalid_argument);
    CHECK_THROWS_AS(Partition::parse(""), std::invalid_argument);
}

TEST_CASE("enumeration matches bell numbers") {
    // Exhaustive enumeration oracle: count and uniqueness.
    for (int n = 1; n <= 8; ++n) {
        std::set<std::string> seen;
        std::string prev;
        for_each_partition(n, [&](const Partition& p) {
            const std::string s = p.to_string();
            CHECK(seen.insert(s).second);
            CHECK(prev < s);  // restricted-growth lexicographic order
            prev = s;
            return true;
        });
        CHECK(seen.size() == bell_number(n));
    }
    CHECK(bell_number(3) == 5);
    CHECK(bell_number(4) == 15);
    CHECK(bell_number(14) == 190899322ull);
}

TEST_CASE("enumeration guard") {
    CHECK_THROWS_AS(for_each_partition(20, [](const Partition&) { return true; }),
                    std::invalid_argument);
    // force lifts the guard (stop immediately to keep it cheap)
    int count = 0;
    for_each_partition(
        15,
        [&](const Partition&) {
            ++count;
            return count < 3;
        },
        /*force=*/true);
    CHECK(count == 3);
}

TEST_CASE("refinement") {
    const Partition fine({0, 1, 2, 3});
    const Partition mid({0, 0, 1, 2});
    const Partition coarse({0, 0, 0, 1});
    CHECK(fine.refines(mid));
    CHECK(mid.refines(coarse));
    CHECK(fine.refines(coarse));
    CHECK_FALSE(coarse.refines(mid));
    CHECK(mid.refines(mid));
}

TEST_CASE("one-step moves") {
    const Partition p({0, 0, 1});
    const auto merges = p.merge_neighbors();
    REQUIRE(merges.size() == 1);
    CHECK(merges[0] == Partition({0, 0, 0}));

    const auto splits = p.split_neighbors();
    REQUIRE(splits.size() == 1);
    CHECK(splits[0] == Partition({0, 1, 2}));

    // Counting: splits of a cell of size s contribute 2^(s-1) - 1.
    const Partition merged = Partition::all_merged(4);
    CHECK(merged.split_neighbors().size() == 7);
    CHECK(Partition::identity(4).merge_neighbors().size() == 6);

    CHECK_THROWS_AS(p.split_cell(1, std::vector<int>{2}), std::invalid_argument);
    CHECK(p.split_cell(0, std::vector<int>{0}) == Partition({0, 1, 2}));
    CHECK_THROWS_AS(p.split_cell(0, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("identity and merged") {
    CHECK(Partition::identity(3) == Partition({0, 1, 2}));
    CHECK(Partition::all_merged(3) == Partition({0, 0, 0}));
    CHECK(Partition::identity(1) == Partition::all_merged(1));
}

}  // TEST_SUITE
