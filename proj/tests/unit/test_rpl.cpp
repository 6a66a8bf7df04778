#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "generators.hpp"
#include "llnsim/rpl/dodag_export.hpp"
#include "llnsim/rpl/node.hpp"

using namespace llnsim;
using namespace llnsim::rpl;

namespace {

template <typename T>
std::vector<T> all_of(const Actions& actions) {
    std::vector<T> out;
    for (const auto& a : actions) {
        if (const auto* t = std::get_if<T>(&a)) out.push_back(*t);
    }
    return out;
}

template <typename M>
std::vector<std::pair<std::optional<MoteId>, M>> sent(const Actions& actions) {
    std::vector<std::pair<std::optional<MoteId>, M>> out;
    for (const auto& s : all_of<SendControl>(actions)) {
        if (const auto* m = std::get_if<M>(&s.message)) out.emplace_back(s.to, *m);
    }
    return out;
}

NodeConfig config(MoteId id, Role role) {
    NodeConfig c;
    c.id = id;
    c.role = role;
    c.trickle.imin_ms = 100;
    c.trickle.doublings = 4;
    return c;
}

DioMessage dio_from(std::uint16_t rank, std::uint8_t version = 0) {
    DioMessage d;
    d.rank = rank;
    d.version_number = version;
    d.grounded = true;
    d.dodag_id = lowpan::address_for_mote(1);
    return d;
}

}  // namespace

TEST_CASE("DIO wire layout") {
    DioMessage d;
    d.rpl_instance_id = 0x1e;
    d.version_number = 0xf0;
    d.rank = 0x0180;
    d.grounded = true;
    d.o_flag = false;
    d.mop = Mop{2};
    d.prf = Prf{5};
    d.dtsn = 0x33;
    d.flags = 0;
    d.reserved = 0;
    d.dodag_id = lowpan::address_for_mote(1);
    const auto wire = encode_control(d);
    REQUIRE(wire.size() == 4 + kDioBodySize);
    CHECK(wire[0] == 155);
    CHECK(wire[1] == 1);
    CHECK(wire[4] == 0x1e);
    CHECK(wire[5] == 0xf0);
    CHECK(wire[6] == 0x01);
    CHECK(wire[7] == 0x80);
    CHECK(wire[8] == 0b1'0'010'101);
    CHECK(wire[9] == 0x33);
    CHECK(wire[12] == 0xfe);
    CHECK(wire[13] == 0x80);
    CHECK(wire[27] == 0x01);
    CHECK(std::get<DioMessage>(decode_control(wire)) == d);
}

TEST_CASE("bit fields reject out-of-range values") {
    CHECK_THROWS_AS(Mop{8}, std::out_of_range);
    CHECK(Prf{7}.value() == 7);
}

TEST_CASE("control messages round-trip") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const auto m = testing::random_control(rng);
        CHECK(decode_control(encode_control(m)) == m);
    }
}

TEST_CASE("control decoding rejects malformed input") {
    auto wire = encode_control(dio_from(128));
    SUBCASE("truncated") {
        wire.pop_back();
        CHECK_THROWS_AS(decode_control(wire), ControlCodecError);
    }
    SUBCASE("trailing octet") {
        wire.push_back(0);
        CHECK_THROWS_AS(decode_control(wire), ControlCodecError);
    }
    SUBCASE("not RPL") {
        wire[0] = 128;
        CHECK_THROWS_AS(decode_control(wire), ControlCodecError);
    }
    SUBCASE("unknown code") {
        wire[1] = 0x8a;
        CHECK_THROWS_AS(decode_control(wire), ControlCodecError);
    }
    SUBCASE("DAO reserved octet") {
        auto dao = encode_control(DaoMessage{0, 3, lowpan::address_for_mote(3), 1, false});
        dao[6] = 1;
        CHECK_THROWS_AS(decode_control(dao), ControlCodecError);
    }
}

TEST_CASE("rank arithmetic") {
    CHECK(compute_rank(kRootRank, 1.0) == 128);
    CHECK(compute_rank(128, 1.5) == 320);
    CHECK(compute_rank(0, 2.0) == 256);
    CHECK(compute_rank(0, 1.0039) == 128);  // 128.4992
    CHECK(compute_rank(0, 1.004) == 129);   // 128.512
    CHECK_FALSE(compute_rank(0xff00, 2.0).has_value());
    CHECK_THROWS_AS(compute_rank(0, 0.9), std::invalid_argument);
    CHECK(version_newer(1, 0));
    CHECK(version_newer(0, 255));
    CHECK_FALSE(version_newer(0, 0));
    CHECK_FALSE(version_newer(128, 0));
    CHECK(version_newer(127, 0));
}

TEST_CASE("trickle follows a hand-computed schedule") {
    TrickleParams p;
    p.imin_ms = 100;
    p.doublings = 3;
    p.k = 2;
    Rng rng(42);
    Rng oracle(42);
    TrickleTimer t(p);
    t.start(0, rng);
    const SimTime expected_intervals[] = {100'000, 200'000, 400'000, 800'000, 800'000};
    SimTime start = 0;
    for (SimTime interval : expected_intervals) {
        CHECK(t.interval() == interval);
        CHECK(t.interval_start() == start);
        const SimTime offset = oracle.uniform_int(interval / 2, interval - 1);
        CHECK(t.fire_at() == start + offset);
        CHECK(t.fire_at() - start >= interval / 2);
        CHECK(t.fire_at() - start < interval);
        CHECK(t.fire());
        start = t.interval_end();
        t.end_interval(start, rng);
    }

    SUBCASE("k consistent messages suppress the transmission") {
        t.hear_consistent();
        CHECK(t.fire());
        t.hear_consistent();
        CHECK_FALSE(t.fire());
        const auto gen = t.generation();
        t.end_interval(t.interval_end(), rng);
        CHECK(t.counter() == 0);
        CHECK(t.generation() != gen);
    }
    SUBCASE("inconsistency resets to imin") {
        t.hear_inconsistent(5'000'000, rng);
        CHECK(t.interval() == 100'000);
        CHECK(t.interval_start() == 5'000'000);
        CHECK(t.fire_at() < 5'100'000);
    }
    SUBCASE("stop invalidates the deadlines") {
        const auto gen = t.generation();
        t.stop();
        CHECK_FALSE(t.running());
        CHECK(t.generation() != gen);
    }
}

TEST_CASE("objective functions") {
    const NodeStatus mains{PowerSource::mains, 1.0};
    const NodeStatus full{PowerSource::battery, 0.9};
    const NodeStatus low{PowerSource::battery, 0.4};
    std::vector<Candidate> c{{5, 128, 256, low}, {3, 128, 256, full}, {9, 0, 128, low}, {7, 256, 384, mains}};

    CHECK(select_parent(c, EtxOf{}) == 9);
    CHECK(select_parent(c, EnergyOf{}) == 7);
    CHECK(select_parent(c, EnergyOf{false}) == 7);  // mains reports EE 1
    c[3].status = NodeStatus{PowerSource::mains, 0.1};
    CHECK(select_parent(c, EnergyOf{true}) == 7);
    CHECK(select_parent(c, EnergyOf{false}) == 3);

    std::vector<Candidate> tie{{4, 128, 256, full}, {2, 128, 256, full}};
    CHECK(select_parent(tie, EtxOf{}) == 2);
    CHECK(select_parent(tie, EnergyOf{}) == 2);
    CHECK_FALSE(select_parent(std::vector<Candidate>{}, EtxOf{}).has_value());
}

TEST_CASE("root forms the DODAG at boot, others solicit") {
    Rng rng(1);
    Node root(config(1, Role::root));
    auto a = root.start(0, rng);
    CHECK(root.state().joined);
    CHECK(root.state().rank == kRootRank);
    CHECK(all_of<TrickleReset>(a).size() == 1);
    CHECK(all_of<ArmTimer>(a).size() == 2);

    Node router(config(2, Role::router));
    a = router.start(0, rng);
    const auto timers = all_of<ArmTimer>(a);
    REQUIRE(timers.size() == 1);
    CHECK(timers[0].kind == TimerKind::dis);
    CHECK(timers[0].at >= 1);
    CHECK(timers[0].at <= kMicrosPerSecond);
    const auto fired = router.on_timer(TimerKind::dis, timers[0].token, timers[0].at, rng);
    CHECK(sent<DisMessage>(fired).size() == 1);
    CHECK(router.counters().dis_sent == 1);
}

TEST_CASE("a router joins through the root and honours the rank rule") {
    Rng rng(2);
    Node n(config(2, Role::router));
    n.start(0, rng);
    auto a = n.handle_dio(dio_from(kRootRank), 1, {}, 1000, rng);
    CHECK(n.state().joined);
    CHECK(n.state().preferred_parent == 1);
    CHECK(n.state().rank == 256);  // unmeasured link: ETX 2
    const auto changes = all_of<ParentChanged>(a);
    REQUIRE(changes.size() == 1);
    CHECK_FALSE(changes[0].from.has_value());
    CHECK(changes[0].to == 1);
    CHECK(all_of<TrickleReset>(a).size() == 1);
    const auto daos = sent<DaoMessage>(a);
    REQUIRE(daos.size() == 1);
    CHECK(daos[0].first == 1);
    CHECK(daos[0].second.target == n.address());

    for (int i = 0; i < 5; ++i) n.on_link_outcome(1, true, 2000 + i, rng);
    CHECK(n.state().rank == 128);
    CHECK(n.state().lowest_rank == 128);

    // Equal or deeper ranks are never admitted.
    n.handle_dio(dio_from(128), 3, {}, 3000, rng);
    n.handle_dio(dio_from(300), 4, {}, 3000, rng);
    CHECK_FALSE(n.state().parent_set.contains(3));
    CHECK_FALSE(n.state().parent_set.contains(4));
    const auto cands = n.candidates(3000);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].id == 1);

    // A consistent DIO from the parent counts towards suppression.
    const auto before = n.trickle().counter();
    n.handle_dio(dio_from(kRootRank), 1, {}, 3500, rng);
    CHECK(n.trickle().counter() == before + 1);
}

TEST_CASE("unknown instance is ignored") {
    Rng rng(3);
    Node n(config(2, Role::router));
    auto d = dio_from(0);
    d.rpl_instance_id = 7;
    CHECK(n.handle_dio(d, 1, {}, 0, rng).empty());
    CHECK(n.counters().ignored_dio_unknown_instance == 1);
    CHECK_FALSE(n.state().joined);
}

TEST_CASE("a leaf joins but never emits DIOs") {
    Rng rng(3);
    Node leaf(config(6, Role::leaf));
    leaf.start(0, rng);
    const auto a = leaf.handle_dio(dio_from(0), 1, {}, 10, rng);
    CHECK(leaf.state().joined);
    CHECK(all_of<TrickleReset>(a).empty());
    CHECK_FALSE(leaf.trickle().running());
    CHECK(leaf.handle_dis({}, 9, 20, rng).empty());
    CHECK(leaf.counters().ignored_dis == 1);
}

TEST_CASE("DIS: joined routers answer with a unicast DIO") {
    Rng rng(4);
    Node n(config(2, Role::router));
    CHECK(n.handle_dis({}, 5, 0, rng).empty());
    n.handle_dio(dio_from(0), 1, {}, 0, rng);
    const auto a = n.handle_dis({}, 5, 100, rng);
    const auto dios = sent<DioMessage>(a);
    REQUIRE(dios.size() == 1);
    CHECK(dios[0].first == 5);
    CHECK(dios[0].second.rank == n.state().rank);
    CHECK(all_of<TrickleReset>(a).size() == 1);
}

TEST_CASE("storing-mode DAO handling") {
    Rng rng(5);
    Node root(config(1, Role::root));
    root.start(0, rng);
    Node mid(config(2, Role::router));
    mid.handle_dio(dio_from(0), 1, {}, 0, rng);
    const auto target = lowpan::address_for_mote(3);

    auto a = mid.handle_dao(DaoMessage{kInstanceId, 3, target, 7, false}, 3, 10, rng);
    CHECK(sent<DaoAckMessage>(a).size() == 1);
    const auto up = sent<DaoMessage>(a);
    REQUIRE(up.size() == 1);
    CHECK(up[0].first == 1);
    CHECK(up[0].second.target == target);
    CHECK(mid.route(target).kind == RouteDecision::Kind::next_hop);
    CHECK(mid.route(target).next_hop == 3);

    // Retransmission of the same DAO: ack again, nothing forwarded.
    a = mid.handle_dao(DaoMessage{kInstanceId, 3, target, 7, false}, 3, 20, rng);
    CHECK(sent<DaoAckMessage>(a).size() == 1);
    CHECK(sent<DaoMessage>(a).empty());

    a = root.handle_dao(up[0].second, 2, 30, rng);
    CHECK(sent<DaoAckMessage>(a).size() == 1);
    CHECK(sent<DaoMessage>(a).empty());
    CHECK(root.route(target).next_hop == 2);
    CHECK(root.route(lowpan::address_for_mote(99)).kind == RouteDecision::Kind::no_route);
    CHECK(root.route(root.address()).kind == RouteDecision::Kind::local);

    // A DAO from the preferred parent would create a loop and is ignored.
    CHECK(mid.handle_dao(DaoMessage{kInstanceId, 1, lowpan::address_for_mote(1), 1, false}, 1, 40, rng).empty());

    // No-path withdraws the route and propagates.
    a = mid.handle_dao(DaoMessage{kInstanceId, 3, target, 8, true}, 3, 50, rng);
    CHECK(sent<DaoAckMessage>(a).empty());
    const auto withdrawn = sent<DaoMessage>(a);
    REQUIRE(withdrawn.size() == 1);
    CHECK(withdrawn[0].second.no_path);
    CHECK(mid.route(target).next_hop == 1);  // default route now
}

TEST_CASE("DAOs are retransmitted until acknowledged") {
    Rng rng(6);
    Node n(config(2, Role::router));
    auto a = n.handle_dio(dio_from(0), 1, {}, 0, rng);
    auto timers = all_of<ArmTimer>(a);
    auto retx = std::find_if(timers.begin(), timers.end(), [](const ArmTimer& t) { return t.kind == TimerKind::dao_retransmit; });
    REQUIRE(retx != timers.end());
    a = n.on_timer(TimerKind::dao_retransmit, retx->token, retx->at, rng);
    const auto again = sent<DaoMessage>(a);
    REQUIRE(again.size() == 1);
    n.handle_dao_ack(DaoAckMessage{kInstanceId, 1, again[0].second.sequence, 0}, 1, retx->at + 1, rng);
    const auto next = all_of<ArmTimer>(a).at(0);
    CHECK(n.on_timer(TimerKind::dao_retransmit, next.token, next.at, rng).empty());
}

TEST_CASE("a failing parent link ends in detachment") {
    Rng rng(7);
    Node n(config(2, Role::router));
    n.handle_dio(dio_from(0), 1, {}, 0, rng);
    Actions last;
    int attempts = 0;
    while (n.state().joined && attempts < 200) last = n.on_link_outcome(1, false, 1000 + attempts++, rng);
    CHECK_FALSE(n.state().joined);
    const auto changes = all_of<ParentChanged>(last);
    REQUIRE(changes.size() == 1);
    CHECK(changes[0].from == 1);
    CHECK_FALSE(changes[0].to.has_value());
    const auto timers = all_of<ArmTimer>(last);
    REQUIRE(timers.size() == 1);
    CHECK(timers[0].kind == TimerKind::dis);
    CHECK(timers[0].at == 1000 + attempts - 1 + kMicrosPerSecond);
    // Detached, the node still refuses anything not below its lowest rank.
    n.handle_dio(dio_from(256), 3, {}, 5000, rng);
    CHECK_FALSE(n.state().joined);
}

TEST_CASE("global repair") {
    Rng rng(8);
    Node root(config(1, Role::root));
    root.start(0, rng);
    Node n(config(2, Role::router));
    CHECK_THROWS_AS(n.global_repair(0, rng), std::logic_error);
    n.handle_dio(root.make_dio(), 1, {}, 0, rng);
    for (int i = 0; i < 5; ++i) n.on_link_outcome(1, true, 1, rng);
    REQUIRE(n.state().rank == 128);

    auto a = root.global_repair(100, rng);
    CHECK(root.state().version_number == 1);
    CHECK(all_of<TrickleReset>(a).size() == 1);

    a = n.handle_dio(root.make_dio(), 1, {}, 200, rng);
    CHECK(n.state().version_number == 1);
    CHECK(n.state().joined);
    const auto changes = all_of<ParentChanged>(a);
    REQUIRE(changes.size() == 2);
    CHECK(changes[0].from == 1);
    CHECK_FALSE(changes[0].to.has_value());
    CHECK_FALSE(changes[1].from.has_value());
    CHECK(changes[1].to == 1);

    // An old-version DIO triggers a reset so the sender can catch up.
    a = n.handle_dio(dio_from(0, 0), 4, {}, 300, rng);
    CHECK(all_of<TrickleReset>(a).size() == 1);
    CHECK_FALSE(n.state().parent_set.contains(4));
}

TEST_CASE("stale neighbours stop being candidates") {
    Rng rng(9);
    auto c = config(2, Role::router);
    Node n(c);
    n.handle_dio(dio_from(0), 1, {}, 0, rng);
    CHECK(n.candidates(3 * c.trickle.imax_us()).size() == 1);
    CHECK(n.candidates(3 * c.trickle.imax_us() + 1).empty());
}

TEST_CASE("DODAG export helpers") {
    std::vector<DodagVertex> v{{1, Role::root, true, 0, std::nullopt},
                               {2, Role::router, true, 128, 1},
                               {3, Role::router, true, 256, 2},
                               {4, Role::router, false, kInfiniteRank, std::nullopt}};
    CHECK(parent_graph_acyclic(v));
    CHECK(depth_of(v, 3) == 2u);
    CHECK(depth_of(v, 1) == 0u);
    CHECK_FALSE(depth_of(v, 4).has_value());
    std::ostringstream dot;
    write_dodag_dot(dot, v, 3);
    CHECK(dot.str().find("digraph") != std::string::npos);
    CHECK(dot.str().find("n3 -> n2") != std::string::npos);

    v[1].parent = 3;
    CHECK_FALSE(parent_graph_acyclic(v));
    CHECK_FALSE(depth_of(v, 3).has_value());
}
