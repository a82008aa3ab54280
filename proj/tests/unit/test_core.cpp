#include "bfdr/core.hpp"

#include "doctest.h"

#include <cmath>

using namespace bfdr;

TEST_CASE("ordering sorts and keeps the rank-to-index map")
{
    const auto o = order_sample(PValueSample{{0.6, 0.01, 0.9, 0.02}});
    CHECK(o.sorted_values() == std::vector<double>{0.01, 0.02, 0.6, 0.9});
    CHECK(o.permutation() == std::vector<std::size_t>{1, 3, 0, 2});
    CHECK(o.at_rank(0) == 0.0);
    CHECK(o.at_rank(4) == 0.9);
    CHECK(o.index_at_rank(1) == 1);
}

TEST_CASE("ties keep original index order")
{
    const auto o = order_sample(PValueSample{{0.5, 0.5, 0.1, 0.5}});
    CHECK(o.permutation() == std::vector<std::size_t>{2, 0, 1, 3});
}

TEST_CASE("empty sample orders to empty")
{
    const auto o = order_sample(PValueSample{});
    CHECK(o.empty());
}

TEST_CASE("values outside [0,1] are rejected with their index")
{
    try {
        validate(PValueSample{{0.1, 1.2}});
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find('1') != std::string::npos);
    }
    CHECK_THROWS_AS(validate(PValueSample{{-0.01}}), ValidationError);
    CHECK_THROWS_AS(validate(PValueSample{{std::nan("")}}), ValidationError);
}

TEST_CASE("outcome from rank")
{
    const auto o = order_sample(PValueSample{{0.01, 0.02, 0.6, 0.9}});
    const auto two = outcome_from_rank(o, 2);
    CHECK(two.r == 2);
    CHECK(two.threshold == 0.02);
    CHECK(two.rejected == std::vector<std::size_t>{0, 1});
    REQUIRE(two.boundary_index);
    CHECK(*two.boundary_index == 1);

    const auto none = outcome_from_rank(o, 0);
    CHECK(none.r == 0);
    CHECK(none.threshold == 0.0);
    CHECK(none.rejected.empty());
    CHECK_FALSE(none.boundary_index);

    CHECK(outcome_from_rank(o, 4).rejected.size() == 4);
    CHECK_THROWS(outcome_from_rank(o, 5));
}

TEST_CASE("null count reads the truth labels")
{
    PValueSample s{{0.1, 0.2, 0.3}};
    CHECK(s.null_count() == 0);
    s.truth = std::vector<bool>{true, false, true};
    CHECK(s.null_count() == 2);
}
