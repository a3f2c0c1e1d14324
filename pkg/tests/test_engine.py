from fractions import Fraction

from kes.engine import affordable_set, compute_support, run_kes, select_next
from kes.model import Agent, BallotSet, Money, Project, ScenarioConfig, build_instance
from kes.rational import Rat

from naive_replay import naive_kes


CHF = Money.from_str


def walkthrough_instance():
    """B=100.00, r=1/2: i1 backs A, i2 backs B, field f splits across both."""
    projects = [
        Project("A", "Alpha", CHF("60.00")),
        Project("B", "Beta", CHF("40.00")),
    ]
    agents = [Agent.individual("i1"), Agent.individual("i2"), Agent.field("f", 1)]
    ballots = BallotSet({"i1": {"A": 10}, "i2": {"B": 10}, "f": {"A": 5, "B": 5}})
    config = ScenarioConfig(total_budget=CHF("100.00"), split_r=Rat(1, 2))
    return build_instance(projects, agents, ballots, config)


class TestSupport:
    def test_hand_evaluated_sum(self):
        # i1: b=25.00, u(A)=1; f: b=50.00, u(A)=1/2 -> S(A)=50.00
        instance = walkthrough_instance()
        buckets = dict(instance.initial_buckets)
        assert compute_support(instance, buckets, "A") == 5000

    def test_unsupported_project_is_zero(self):
        projects = [Project("A", "A", CHF("1.00")), Project("C", "C", CHF("2.00"))]
        agents = [Agent.individual("i1")]
        ballots = BallotSet({"i1": {"A": 3}})
        instance = build_instance(
            projects, agents, ballots, ScenarioConfig(total_budget=CHF("10.00"))
        )
        assert compute_support(instance, dict(instance.initial_buckets), "C") == 0

    def test_support_tracks_depleted_bucket(self):
        instance = walkthrough_instance()
        buckets = dict(instance.initial_buckets)
        buckets["i1"] = Rat(500)  # 5.00 left
        assert compute_support(instance, buckets, "A") == 500 + 2500


class TestAffordableAndSelect:
    def test_affordability_threshold(self):
        instance = walkthrough_instance()
        buckets = dict(instance.initial_buckets)
        # S(A)=50.00 < cost 60.00; S(B)=50.00 >= cost 40.00
        assert affordable_set(instance, buckets) == {"B"}

    def test_all_buckets_zero(self):
        instance = walkthrough_instance()
        buckets = {aid: Rat(0) for aid in instance.initial_buckets}
        assert affordable_set(instance, buckets) == set()

    def test_tie_breaks_on_cost_then_id(self):
        projects = [
            Project("Y", "Y", CHF("40.00")),
            Project("X", "X", CHF("30.00")),
            Project("a2", "a2", CHF("30.00")),
            Project("a1", "a1", CHF("30.00")),
        ]
        supports = {"X": Rat(50), "Y": Rat(50), "a1": Rat(50), "a2": Rat(50)}
        agents = [Agent.individual("i")]
        instance = build_instance(
            projects, agents, BallotSet({"i": {"X": 1}}),
            ScenarioConfig(total_budget=CHF("10.00")),
        )
        assert select_next({"X", "Y"}, supports, instance) == "X"
        assert select_next({"a1", "a2"}, supports, instance) == "a1"
        assert select_next({"Y"}, supports, instance) == "Y"


class TestRunKes:
    def test_walkthrough_full_replay(self):
        instance = walkthrough_instance()
        result = run_kes(instance)
        assert result.funded == ("B",)
        assert result.receipts == {("i2", "B"): Money(2000), ("f", "B"): Money(2000)}
        assert result.leftover == {"i1": 2500, "i2": 500, "f": 3000}
        assert len(result.rounds) == 1
        record = result.rounds[0]
        assert record.selected == "B"
        assert record.support == 5000
        assert record.payments == {"i2": 2000, "f": 2000}
        # leftover across all agents: 60.00
        assert sum(result.leftover.values()) == 6000

    def test_sole_supporter_pays_full_cost(self):
        projects = [Project("P", "P", CHF("7.00"))]
        agents = [Agent.individual("i")]
        instance = build_instance(
            projects, agents, BallotSet({"i": {"P": 20}}),
            ScenarioConfig(total_budget=CHF("10.00")),
        )
        result = run_kes(instance)
        assert result.funded == ("P",)
        assert result.receipts == {("i", "P"): Money(700)}
        assert result.leftover["i"] == 300

    def test_equal_backers_split_evenly(self):
        projects = [Project("P", "P", CHF("9.00"))]
        agents = [Agent.individual("i1"), Agent.individual("i2")]
        ballots = BallotSet({"i1": {"P": 4}, "i2": {"P": 4}})
        instance = build_instance(
            projects, agents, ballots, ScenarioConfig(total_budget=CHF("10.00"))
        )
        result = run_kes(instance)
        assert result.rounds[0].payments == {"i1": Rat(450), "i2": Rat(450)}

    def test_unconstrained_budget_funds_all_supported(self):
        projects = [
            Project("A", "A", CHF("10.00")),
            Project("B", "B", CHF("20.00")),
            Project("C", "C", CHF("30.00")),
            Project("unloved", "unloved", CHF("1.00")),
        ]
        agents = [Agent.individual("i1"), Agent.individual("i2")]
        ballots = BallotSet({"i1": {"A": 5, "B": 5}, "i2": {"C": 1}})
        instance = build_instance(
            projects, agents, ballots,
            ScenarioConfig(total_budget=CHF("100000.00")),
        )
        result = run_kes(instance)
        assert set(result.funded) == {"A", "B", "C"}

    def test_matches_naive_replay_on_walkthrough(self):
        instance = walkthrough_instance()
        result = run_kes(instance)
        funded, rounds, leftovers = naive_kes(
            budget_cents=10000,
            split_r=Fraction(1, 2),
            individuals=["i1", "i2"],
            fields=[("f", Fraction(1))],
            costs_cents={"A": 6000, "B": 4000},
            raw_points={
                ("i1", "A"): Fraction(10),
                ("i2", "B"): Fraction(10),
                ("f", "A"): Fraction(5),
                ("f", "B"): Fraction(5),
            },
        )
        assert list(result.funded) == funded
        for record, (pid, payments) in zip(result.rounds, rounds):
            assert record.selected == pid
            assert {a: Fraction(int(v.numerator), int(v.denominator))
                    for a, v in record.payments.items()} == payments
        for agent_id, left in leftovers.items():
            assert result.leftover[agent_id] == left
