import json

from fmlab.campaign import PROPERTIES, CampaignConfig, agreement, run_campaign
from fmlab.parser import parse_type


def test_small_campaign_is_clean():
    report = run_campaign(CampaignConfig(seed=3, count=40, depth=3, fuel=300))
    assert report.ok, report.render()
    assert report.checked["nf-idempotent"] == 40
    assert report.checked["generator-sound"] + report.gave_up == 40
    assert sum(report.outcomes.values()) == report.checked["monitor"]
    assert "violations: 0" in report.render()


def test_result_does_not_depend_on_worker_count():
    cfg = CampaignConfig(seed=11, count=12, depth=3, fuel=200)
    one = run_campaign(cfg).to_json()
    two = run_campaign(CampaignConfig(seed=11, count=12, depth=3, fuel=200, workers=2)).to_json()
    assert one == two
    assert set(json.loads(one)["checked"]) == set(PROPERTIES)


def test_seeds_differ():
    a = run_campaign(CampaignConfig(seed=1, count=10, depth=3, fuel=200)).to_dict()
    b = run_campaign(CampaignConfig(seed=2, count=10, depth=3, fuel=200)).to_dict()
    assert a["seed"] != b["seed"]
    assert a["violations"] == b["violations"] == 0


def test_agreement_verdicts():
    assert agreement(parse_type("{x: Nat}"), parse_type("readonly {x: Nat}"), 8) is None
    assert agreement(parse_type("Nat"), parse_type("{x: Nat}"), 8) is None
