#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osp/errors.hpp"
#include "osp/rng.hpp"
#include "osp/sweep.hpp"

using namespace osp;
using sweep::SweepRange;

namespace {

const FrameClass H = FrameClass::Head;
const FrameClass T = FrameClass::TorsoTransverse;
const FrameClass S = FrameClass::FetusSagittal;
const FrameClass D = FrameClass::Detached;
const FrameClass B = FrameClass::Background;

ProbVector one_hot(FrameClass c) {
    ProbVector p{};
    p[static_cast<int>(c)] = 1.0;
    return p;
}

FrameProbabilitySequence sequence_of(const sweep::FrameLabelSequence& labels) {
    FrameProbabilitySequence seq;
    for (FrameClass c : labels) seq.frames.push_back(one_hot(c));
    return seq;
}

}  // namespace

TEST_CASE("label_frames takes the argmax, ties to the lower class code") {
    FrameProbabilitySequence seq;
    seq.frames.push_back(one_hot(S));
    seq.frames.push_back({0.2, 0.3, 0.2, 0.3, 0.0});  // tie between 1 and 3
    seq.frames.push_back({0.2, 0.2, 0.2, 0.2, 0.2});  // five-way tie
    const auto labels = sweep::label_frames(seq);
    CHECK(labels[0] == S);
    CHECK(labels[1] == T);
    CHECK(labels[2] == H);
}

TEST_CASE("smooth_labels mode filter") {
    const sweep::FrameLabelSequence example{H, H, D, D, H};

    SUBCASE("window 1 is the identity") {
        CHECK(sweep::smooth_labels(example, 1) == example);
    }

    SUBCASE("even or non-positive windows are rejected") {
        CHECK_THROWS_AS(sweep::smooth_labels(example, 4), OspError);
        CHECK_THROWS_AS(sweep::smooth_labels(example, 0), OspError);
        CHECK_THROWS_AS(sweep::smooth_labels(example, -3), OspError);
    }

    SUBCASE("window 3 keeps the center label on window ties") {
        // Last position sees {D, H}: tied, and the center's own H wins.
        const sweep::FrameLabelSequence expect{H, H, D, D, H};
        CHECK(sweep::smooth_labels(example, 3) == expect);
    }

    SUBCASE("tie without the center label picks the lowest class code") {
        // Window 5 at position 2 sees H,H,B,T,T: H and T tie at 2, center B
        // is not among the modes, so class 0 (H) wins.
        const sweep::FrameLabelSequence labels{H, H, B, T, T};
        CHECK(sweep::smooth_labels(labels, 5)[2] == H);
    }

    SUBCASE("isolated flips are repaired") {
        sweep::FrameLabelSequence run(20, T);
        run[10] = D;
        const auto smoothed = sweep::smooth_labels(run, 5);
        CHECK(smoothed == sweep::FrameLabelSequence(20, T));
    }

    SUBCASE("edge windows are truncated, not padded") {
        const sweep::FrameLabelSequence labels{D, H, H};
        // Position 0 sees {D, H}: tie, center D stays.
        CHECK(sweep::smooth_labels(labels, 3)[0] == D);
    }
}

TEST_CASE("segment_sweeps finds maximal non-detached runs") {
    sweep::FrameLabelSequence labels;
    auto add = [&](FrameClass c, int n) { labels.insert(labels.end(), n, c); };

    SUBCASE("exactly six runs, separators of any length") {
        for (int s = 0; s < 6; ++s) {
            add(D, 3);
            add(T, 25 + s);
        }
        add(D, 2);
        const auto runs = sweep::segment_sweeps(labels, 20);
        REQUIRE(runs.size() == 6);
        int pos = 0;
        for (int s = 0; s < 6; ++s) {
            pos += 3;
            CHECK(runs[s] == SweepRange{pos, pos + 25 + s});
            pos += 25 + s;
        }
    }

    SUBCASE("eight runs keep the six longest, earlier runs win ties") {
        // Lengths 30,30,30,30,30,30,25,40: the winners are the 40 and the
        // five EARLIEST 30s, i.e. temporal runs {0,1,2,3,4,7}, returned in
        // temporal order.
        const int lengths[8] = {30, 30, 30, 30, 30, 30, 25, 40};
        std::vector<SweepRange> all;
        for (int r = 0; r < 8; ++r) {
            const int start = static_cast<int>(labels.size());
            add(T, lengths[r]);
            all.push_back({start, static_cast<int>(labels.size())});
            add(D, 1);
        }
        const auto runs = sweep::segment_sweeps(labels, 20);
        REQUIRE(runs.size() == 6);
        const std::vector<SweepRange> expected{all[0], all[1], all[2], all[3], all[4], all[7]};
        CHECK(runs == expected);
    }

    SUBCASE("short runs do not qualify") {
        for (int s = 0; s < 6; ++s) {
            add(T, 19);  // below min_run = 20
            add(D, 3);
        }
        try {
            sweep::segment_sweeps(labels, 20);
            FAIL("expected InsufficientSweeps");
        } catch (const OspError& e) {
            CHECK(e.code() == Errc::InsufficientSweeps);
            CHECK(e.detail() == 0);
        }
    }

    SUBCASE("exactly min_run qualifies") {
        for (int s = 0; s < 6; ++s) {
            add(T, 20);
            add(D, 1);
        }
        CHECK(sweep::segment_sweeps(labels, 20).size() == 6);
    }

    SUBCASE("five runs is insufficient, detail carries the count") {
        for (int s = 0; s < 5; ++s) {
            add(T, 30);
            add(D, 1);
        }
        try {
            sweep::segment_sweeps(labels, 20);
            FAIL("expected InsufficientSweeps");
        } catch (const OspError& e) {
            CHECK(e.code() == Errc::InsufficientSweeps);
            CHECK(e.detail() == 5);
        }
    }
}

TEST_CASE("resample_indices contract") {
    SUBCASE("N=250 frozen spot value") {
        const auto idx = sweep::resample_indices(SweepRange{0, 250});
        // position 50: round(50 * 249 / 99) = round(125.7575...) = 126
        CHECK(idx[50] == 126);
        CHECK(idx[0] == 0);
        CHECK(idx[99] == 249);
    }

    SUBCASE("endpoints, monotonicity, identity at N=100") {
        for (int n : {1, 2, 50, 99, 100, 101, 250, 1000}) {
            const auto idx = sweep::resample_indices(SweepRange{0, n});
            REQUIRE(idx.size() == 100);
            CHECK(idx.front() == 0);
            CHECK(idx.back() == n - 1);
            for (std::size_t j = 1; j < idx.size(); ++j) CHECK(idx[j] >= idx[j - 1]);
            if (n == 100) {
                for (int j = 0; j < 100; ++j) CHECK(idx[j] == j);
            }
        }
    }

    SUBCASE("rounding is half away from zero") {
        // N=2: positions 0..49 map to 0 (j/99 < 0.5), 50..99 to 1.
        const auto idx = sweep::resample_indices(SweepRange{0, 2});
        CHECK(idx[49] == 0);
        CHECK(idx[50] == 1);
    }

    SUBCASE("offsets respect the range start") {
        const auto idx = sweep::resample_indices(SweepRange{40, 42});
        CHECK(idx.front() == 40);
        CHECK(idx.back() == 41);
    }

    SUBCASE("empty ranges are rejected") {
        CHECK_THROWS_AS(sweep::resample_indices(SweepRange{5, 5}), OspError);
    }
}

TEST_CASE("build_sweep_grid end to end") {
    sweep::FrameLabelSequence labels;
    auto add = [&](FrameClass c, int n) { labels.insert(labels.end(), n, c); };
    add(D, 12);
    std::vector<SweepRange> expected;
    const FrameClass body[6] = {H, T, S, T, H, S};
    for (int s = 0; s < 6; ++s) {
        const int start = static_cast<int>(labels.size());
        add(body[s], 120 + 10 * s);
        expected.push_back({start, static_cast<int>(labels.size())});
        add(D, 15);
    }
    const auto seq = sequence_of(labels);
    const auto grid = sweep::build_sweep_grid(seq, {});

    for (int s = 0; s < 6; ++s) {
        CHECK(grid.source_ranges[s] == expected[s]);
        for (int p = 0; p < 100; ++p) {
            const int src = grid.source_index(s, p);
            CHECK(src >= expected[s].start);
            CHECK(src < expected[s].end);
            CHECK(grid.cell(s, p) == seq[src]);
        }
    }

    SUBCASE("insufficient sweeps propagates") {
        sweep::FrameLabelSequence few(100, T);
        CHECK_THROWS_AS(sweep::build_sweep_grid(sequence_of(few), {}), OspError);
    }
}
