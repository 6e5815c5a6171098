#include <doctest.h>

#include <map>

#include "skillforge/geometry.hpp"
#include "support.hpp"

using namespace skillforge;
using testsupport::kDeg;

namespace {

const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();

Classification classify_normals(const std::vector<Vec3>& normals) {
    std::vector<ContactPoint> cs;
    for (const auto& n : normals) cs.push_back({Vec3::Zero(), n});
    return classify(cs, MotionKind::Translation);
}

}  // namespace

TEST_CASE("screw_lhs: worked examples") {
    MotionSpec up{MotionKind::Translation, Z, Vec3::Zero(), 0.0};
    MotionSpec down{MotionKind::Translation, -Z, Vec3::Zero(), 0.0};
    CHECK(screw_lhs({Vec3::Zero(), Z}, up) == doctest::Approx(1.0));
    CHECK(screw_lhs({Vec3::Zero(), Z}, down) == doctest::Approx(-1.0));
    // ((1,0,0) x (0,0,1)) . (0,1,0) = (0,-1,0) . (0,1,0) = -1
    MotionSpec rot{MotionKind::Rotation, Y, Vec3::Zero(), 0.0};
    CHECK(screw_lhs({X, Z}, rot) == doctest::Approx(-1.0));
}

TEST_CASE("screw_lhs: rejects bad input") {
    MotionSpec up{MotionKind::Translation, Z, Vec3::Zero(), 0.0};
    CHECK_THROWS_AS(screw_lhs({Vec3::Zero(), Vec3(0, 0, 2)}, up), InputError);
    CHECK_THROWS_AS(screw_lhs({Vec3::Zero(), Z}, MotionSpec{MotionKind::Translation, Vec3(1, 1, 0), {}, 0.0}),
                    InputError);
    CHECK_THROWS_AS(screw_lhs({Vec3::Zero(), Z}, MotionSpec{MotionKind::Rotation, Z, {}, 0.1}), InputError);
}

TEST_CASE("screw_lhs rotation matches the first-order displacement of a rotated point") {
    // Oracle: rotate p by a tiny angle about (c, s) and project the displacement on n.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
        const Vec3 n = testsupport::random_unit(rng), s = testsupport::random_unit(rng);
        const double eps = 1e-7;
        const Vec3 moved = c + Eigen::AngleAxisd(eps, s) * (p - c);
        const double oracle = n.dot(moved - p) / eps;
        CHECK(screw_lhs({p, n}, {MotionKind::Rotation, s, c, 0.0}) == doctest::Approx(oracle).epsilon(1e-5));
    }
}

TEST_CASE("rotation_effective_normals: examples") {
    auto e = rotation_effective_normals({{X, Z}}, Vec3::Zero());
    REQUIRE(e.normals.size() == 1);
    CHECK(e.normals[0].isApprox(-Y));
    CHECK(e.dropped == 0);

    auto d = rotation_effective_normals({{Vec3(1, 2, 3), Z}}, Vec3(1, 2, 3));
    CHECK(d.normals.empty());
    CHECK(d.dropped == 1);

    auto sym = rotation_effective_normals({{X, Z}, {-X, -Z}}, Vec3::Zero());
    REQUIRE(sym.normals.size() == 2);
    CHECK(sym.normals[0].isApprox(sym.normals[1]));  // (-p) x (-n) = p x n

    auto anti = rotation_effective_normals({{X, Z}, {-X, Z}}, Vec3::Zero());
    REQUIRE(anti.normals.size() == 2);
    CHECK(anti.normals[0].isApprox(-anti.normals[1]));
}

TEST_CASE("feasible_cone: examples") {
    auto c0 = feasible_cone({});
    CHECK(c0.lineality_dim == 3);
    CHECK(c0.span_dim == 3);
    auto c1 = feasible_cone({Z});
    CHECK(c1.lineality_dim == 2);
    CHECK(c1.span_dim == 3);
    auto c2 = feasible_cone({Z, -Z});
    CHECK(c2.lineality_dim == 2);
    CHECK(c2.span_dim == 2);
    auto dup = feasible_cone({Z, Z, Vec3(0, 1e-9, 1).normalized()});
    CHECK(dup.normals.size() == 1);
    CHECK(dup.duplicates_removed == 2);
    CHECK_THROWS_AS(feasible_cone({Vec3(0, 0, 0.5)}), InputError);
}

TEST_CASE("dof_profile: table rows") {
    CHECK(dof_profile(feasible_cone({Z})) == DofProfile{2, 1, 0});
    CHECK(dof_profile(feasible_cone({X, -X, Y, -Y})) == DofProfile{1, 0, 2});
    CHECK(dof_profile(feasible_cone({X, -X, Y, -Y, Z})) == DofProfile{0, 1, 2});
}

TEST_CASE("classify: examples") {
    auto nc = classify({}, MotionKind::Translation);
    CHECK(nc.label == StateLabel::NC);
    CHECK(nc.profile == DofProfile{3, 0, 0});
    auto pc1 = classify_normals({Z});
    CHECK(pc1.label == StateLabel::PC1);
    CHECK_THROWS_AS(classify({}, MotionKind::Rotation), InputError);
}

TEST_CASE("classify: hinged door, closed against its stop, is OR") {
    // Hinge along z through the origin: pins above and below constrain tilting,
    // the stop at the handle blocks one sense of the swing.
    std::vector<ContactPoint> cs;
    for (double h : {-0.3, 0.3})
        for (const Vec3& n : {X, Vec3(-X), Y, Vec3(-Y)}) cs.push_back({Vec3(0, 0, h), n});
    cs.push_back({Vec3(0.5, 0, 0), Y});
    auto c = classify(cs, MotionKind::Rotation, Vec3::Zero());
    CHECK(c.label == StateLabel::OR);
    CHECK(c.profile == DofProfile{0, 1, 2});
}

TEST_CASE("canonical contact sets reproduce every table row") {
    // Rows as printed: (label, M, D, C)
    const std::vector<std::tuple<StateLabel, int, int, int>> rows{
        {StateLabel::NC, 3, 0, 0},  {StateLabel::PC1, 2, 1, 0}, {StateLabel::TR, 2, 0, 1},
        {StateLabel::PC2, 1, 2, 0}, {StateLabel::OT1, 1, 1, 1}, {StateLabel::PR, 1, 0, 2},
        {StateLabel::PCN, 0, 3, 0}, {StateLabel::OT2, 0, 2, 1}, {StateLabel::OP, 0, 1, 2},
        {StateLabel::FT, 0, 0, 3},  {StateLabel::NR, 3, 0, 0},  {StateLabel::RT1, 2, 1, 0},
        {StateLabel::SP, 2, 0, 1},  {StateLabel::RT2, 1, 2, 0}, {StateLabel::OS1, 1, 1, 1},
        {StateLabel::RV, 1, 0, 2},  {StateLabel::RTN, 0, 3, 0}, {StateLabel::OS2, 0, 2, 1},
        {StateLabel::OR, 0, 1, 2},  {StateLabel::FR, 0, 0, 3}};
    for (const auto& [label, m, d, c] : rows) {
        CAPTURE(to_string(label));
        const auto set = canonical_contact_set(label);
        CHECK(set.kind == (is_rotational(label) ? MotionKind::Rotation : MotionKind::Translation));
        const auto cl = classify(set);
        CHECK(cl.label == label);
        CHECK(cl.profile == DofProfile{m, d, c});
        CHECK(canonical_profile(label) == DofProfile{m, d, c});
    }
}

TEST_CASE("dstate_of_direction: examples and symmetry") {
    auto pc1 = feasible_cone({Z});
    CHECK(dstate_of_direction(pc1, X) == DState::Maintenance);
    CHECK(dstate_of_direction(pc1, Z) == DState::Detachment);
    auto pr = feasible_cone({X, -X, Y, -Y});
    CHECK(dstate_of_direction(pr, X) == DState::Constraint);
    CHECK(dstate_of_direction(pr, Z) == DState::Maintenance);
    CHECK_THROWS_AS(dstate_of_direction(pc1, Vec3(2, 0, 0)), InputError);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        auto normals = testsupport::separated_normals(rng, 1 + i % 5, i % 2);
        auto cone = feasible_cone(normals);
        const Vec3 d = testsupport::random_unit(rng);
        CHECK((dstate_of_direction(cone, d) == DState::Maintenance) ==
              (dstate_of_direction(cone, -d) == DState::Maintenance));
    }
}

TEST_CASE("oracle: examples") {
    ContactSet empty;
    auto o0 = oracle_classify_sampled(empty, 2562);
    CHECK(o0.label == StateLabel::NC);
    CHECK(o0.profile == DofProfile{3, 0, 0});

    ContactSet up;
    up.contacts.push_back({Vec3::Zero(), Z});
    auto o1 = oracle_classify_sampled(up, 2562);
    CHECK(o1.label == StateLabel::PC1);
    CHECK(o1.profile == DofProfile{2, 1, 0});

    auto op = oracle_classify_sampled(canonical_contact_set(StateLabel::OP), 2562);
    CHECK(op.label == StateLabel::OP);
    CHECK(op.profile == DofProfile{0, 1, 2});

    CHECK_THROWS(oracle_classify_sampled(up, 500));
}

TEST_CASE("property: classify agrees with the sampled oracle on random non-degenerate sets") {
    std::mt19937_64 rng(20240601);
    int translation = 0, rotation = 0;
    std::map<StateLabel, int> seen;
    for (int i = 0; i < 300; ++i) {
        const int count = 1 + i % 6;
        const int pairs = (i / 6) % 3;
        auto normals = testsupport::separated_normals(rng, count, pairs);
        const bool rot = i % 3 == 2;
        ContactSet set = rot ? testsupport::rotation_set(normals, Vec3(0.1, -0.2, 0.3), rng)
                             : testsupport::translation_set(normals, rng);
        const auto a = classify(set);
        const auto b = oracle_classify_sampled(set, 2562);
        CAPTURE(i);
        CHECK_FALSE(b.indeterminate);
        CHECK(a.label == b.label);
        CHECK(a.profile == b.profile);
        ++seen[a.label];
        (rot ? rotation : translation)++;
    }
    CHECK(seen.size() >= 10);
}

TEST_CASE("property: invariances") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 150; ++i) {
        auto normals = testsupport::separated_normals(rng, 1 + i % 6, i % 3);
        auto set = testsupport::translation_set(normals, rng);
        const auto base = classify(set);
        CHECK(base.profile.maintenance + base.profile.detachment + base.profile.constraint == 3);

        auto dup = set;
        dup.contacts.push_back(set.contacts[static_cast<std::size_t>(i) % set.contacts.size()]);
        CHECK(classify(dup).label == base.label);

        const Eigen::Matrix3d R = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
        auto rotated = set;
        for (auto& c : rotated.contacts) {
            c.p = R * c.p;
            c.n = (R * c.n).normalized();
        }
        const auto rc = classify(rotated);
        CHECK(rc.label == base.label);
        CHECK(rc.profile == base.profile);

        // Rotation classification is translation classification of the effective normals.
        const Vec3 center(0.05 * i, 0.0, -0.1);
        const auto eff = rotation_effective_normals(set.contacts, center);
        const auto rot = classify(set.contacts, MotionKind::Rotation, center);
        const auto tr = classify_normals(eff.normals);
        CHECK(rot.profile == tr.profile);
        CHECK(rot.dropped_contacts == eff.dropped);
    }
}

TEST_CASE("labels round-trip and group") {
    for (int i = 0; i < 20; ++i) {
        const auto l = static_cast<StateLabel>(i);
        CHECK(parse_state(to_string(l)) == l);
        CHECK(label_for(canonical_profile(l), is_rotational(l) ? MotionKind::Rotation : MotionKind::Translation) == l);
    }
    CHECK(coarse_group(StateLabel::PC2) == "PC");
    CHECK(coarse_group(StateLabel::OT1) == "OT");
    CHECK(coarse_group(StateLabel::PR) == "PR");
    CHECK_FALSE(parse_state("XX").has_value());
}
