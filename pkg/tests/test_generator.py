"""Generator tests: catalog values, load shares, cost model, post-conditions."""

import numpy as np
import pytest

from vmcons.generator import (
    GenParams, PowerModel, GenerationStalled,
    catalog, sigma_k, tau, derive_costs, generate_instance, generate_with_meta,
)
from vmcons.model import Instance, VmSpec, ServerSpec
from vmcons import serialize


def test_catalog_values():
    vms, servers = catalog()
    assert len(vms) == 5 and len(servers) == 10
    np.testing.assert_array_equal(vms[2].demand, [4, 8, 300])
    np.testing.assert_array_equal(servers[6].capacity, [16, 32, 4000])
    assert servers[6].max_power == 300
    np.testing.assert_array_equal(vms[0].demand, [1, 1, 10])
    np.testing.assert_array_equal(servers[0].capacity, [4, 8, 1000])
    assert servers[0].max_power == 180
    assert servers[9].max_power == 410


def simple_instance(n, d_new):
    vms, servers = catalog()
    n = np.asarray(n)
    I, J = n.shape
    c_run, c_assign, c_mig, c_new = derive_costs(vms[:I], servers[:J])
    return Instance(resources=("cpu", "ram", "bandwidth"),
                    vm_types=tuple(vms[:I]), servers=tuple(servers[:J]),
                    n=n, d_new=d_new, c_run=c_run, c_assign=c_assign,
                    c_mig=c_mig, c_new=c_new)


def test_sigma_examples():
    inst = simple_instance(np.zeros((1, 1), dtype=int), [0])
    assert sigma_k(inst, 0) == 0.0
    # one small VM on the first server: CPU share 1/4 dominates
    inst = simple_instance([[1]], [0])
    assert sigma_k(inst, 0) == pytest.approx(0.25)
    assert sigma_k(inst, 0) == sigma_k(inst, 0)


def test_tau_examples():
    inst = simple_instance([[0, 0]], [0])
    assert tau(inst) == 0.0
    # 12 CPUs of aggregate capacity filled by 12 one-CPU VMs
    inst = simple_instance([[0, 0]], [12])
    assert tau(inst) == pytest.approx(1.0)  # cpu: 12 / (4 + 8)
    # monotone under componentwise growth
    rng = np.random.default_rng(3)
    prev = 0.0
    d = np.zeros(2, dtype=int)
    for _ in range(10):
        d = d + rng.integers(0, 3, size=2)
        inst = simple_instance([[0, 0], [0, 0]], d)
        cur = tau(inst)
        assert cur >= prev - 1e-12
        prev = cur


def test_derived_costs():
    vms, servers = catalog()
    c_run, c_assign, c_mig, c_new = derive_costs(vms, servers)
    assert c_run[0] == pytest.approx(108.0)          # 0.6 * 180
    assert c_assign[0, 0] == pytest.approx(18.0)     # (180-108) * 1/4
    np.testing.assert_array_equal(c_mig, c_assign)
    np.testing.assert_array_equal(c_new, c_assign)
    half = derive_costs(vms, servers, new_cost_scale=0.5)[3]
    np.testing.assert_allclose(half, 0.5 * c_assign)


def test_costs_scale_linearly_with_power():
    vms, servers = catalog()
    doubled = [ServerSpec(sv.capacity, 2 * sv.max_power) for sv in servers]
    base = derive_costs(vms, servers)
    big = derive_costs(vms, doubled)
    for a, b in zip(base, big):
        np.testing.assert_allclose(b, 2 * a)


def test_generation_deterministic():
    params = GenParams(num_servers=10, beta=0.2, alpha=0.5, gamma=0.5, seed=7)
    a, meta_a = generate_with_meta(params)
    b, meta_b = generate_with_meta(params)
    text_a = serialize.dumps(serialize.instance_to_dict(a, meta_a))
    text_b = serialize.dumps(serialize.instance_to_dict(b, meta_b))
    assert text_a == text_b


def test_generation_post_conditions():
    for seed in range(5):
        params = GenParams(num_servers=10, beta=0.4, alpha=0.5, gamma=0.5,
                           seed=seed)
        inst = generate_instance(params)
        u, s = inst.u, inst.s
        K = inst.num_servers
        # never overfilled, and selected servers pushed past beta or saturated
        for k in range(K):
            used = u.T @ inst.n[:, k]
            assert np.all(used <= inst.servers[k].capacity)
            if inst.n[:, k].sum() > 0:
                fits = any(np.all(used + u[i] <= s[k]) for i in range(len(u)))
                assert sigma_k(inst, k) > params.beta or not fits
        assert tau(inst) > params.gamma
        # aggregate demand stays within aggregate capacity
        total = u.T @ (inst.d + inst.d_new)
        assert np.all(total <= s.sum(axis=0))


def test_unloaded_servers_stay_empty():
    params = GenParams(num_servers=20, beta=0.2, seed=11)
    inst = generate_instance(params)
    loaded = inst.n.sum(axis=0) > 0
    # with alpha = 0.5 both groups should be non-trivial at 20 servers
    assert 0 < int(loaded.sum()) < 20


def test_server_type_distribution():
    inst = generate_instance(GenParams(num_servers=23, beta=0.2, seed=1))
    _, servers = catalog()
    sigs = [tuple(sv.capacity) + (sv.max_power,) for sv in servers]
    got = [sigs.index(tuple(sv.capacity) + (sv.max_power,))
           for sv in inst.servers]
    counts = np.bincount(got, minlength=10)
    # 23 = 2 each + remainder 3 to the lowest-index types
    np.testing.assert_array_equal(counts, [3, 3, 3, 2, 2, 2, 2, 2, 2, 2])


def test_param_validation():
    with pytest.raises(ValueError):
        GenParams(num_servers=0, beta=0.2)
    with pytest.raises(ValueError):
        GenParams(num_servers=10, beta=0.0)
    with pytest.raises(ValueError):
        GenParams(num_servers=10, beta=0.2, alpha=1.5)
    with pytest.raises(ValueError):
        PowerModel(p_idle_fraction=-0.1)


def test_stalled_when_nothing_fits():
    huge = VmSpec(np.array([64.0, 64.0, 64000.0]))
    with pytest.raises(GenerationStalled):
        generate_instance(GenParams(num_servers=10, beta=0.2, seed=0),
                          vm_types=[huge])


def test_instance_round_trip():
    params = GenParams(num_servers=10, beta=0.2, seed=42)
    inst, meta = generate_with_meta(params)
    doc = serialize.instance_to_dict(inst, meta)
    back, meta_back = serialize.instance_from_dict(doc)
    assert meta_back == meta
    np.testing.assert_array_equal(back.n, inst.n)
    np.testing.assert_array_equal(back.d_new, inst.d_new)
    np.testing.assert_allclose(back.c_assign, inst.c_assign)
    assert back.resources == inst.resources
    for a, b in zip(back.servers, inst.servers):
        np.testing.assert_array_equal(a.capacity, b.capacity)
        assert a.max_power == b.max_power
    # catalog servers are tagged with their type row
    assert doc["servers"][0]["type"] == 0
