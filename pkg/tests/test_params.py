import pytest
from hypothesis import given, strategies as st

from latentstego.errors import ParseError
from latentstego.params import (
    TABLE_HEADER,
    EmbedParams,
    ParamTable,
    ParamTableRow,
    Scheduler,
    ciphertext_bit_len,
    dump_table,
    load_table,
    max_msg_len,
)

HEADER = ",".join(TABLE_HEADER)


def test_load_single_row():
    table = load_table(b"0,sd-v1-4,golden retriever,0.3,6,dual,256,5,10,16384")
    assert len(table) == 1
    row = table.rows[0]
    assert row.params.tau == 0.3 and row.params.rho == 6
    assert row.params.scheduler is Scheduler.DUAL
    assert row.params.latent_shape == (4, 64, 64)
    assert row.prompt == "golden retriever"


def test_load_with_header_and_quoted_prompt():
    text = HEADER + '\n3,m,"a, b",0,1,single,8,5,10,64\n'
    row = load_table(text).rows[0]
    assert row.prompt == "a, b"
    assert row.params.latent_shape == (4, 4, 4)


@pytest.mark.parametrize(
    "text",
    [
        b"",
        HEADER.encode(),
        b"0,m,p,0.3,0,dual,256,5,10,16384",  # rho = 0
        b"0,m,p,-1,6,dual,256,5,10,16384",
        b"0,m,p,0.3,6,triple,256,5,10,16384",
        b"0,m,p,0.3,6,dual,256,5,10",
        b"0,m,p,0.3,6,dual,256,5,-1,16384",
        b"0,m,p,x,6,dual,256,5,10,16384",
        b"0,m,p,0.3,6,dual,256,5,10,16384\n0,m,q,0.3,6,dual,256,5,10,16384",  # duplicate id
        b"\xff\xfe",
    ],
)
def test_load_rejects(text):
    with pytest.raises(ParseError):
        load_table(text)


def test_flat_shape_when_not_square():
    assert EmbedParams(0.3, 1, latent_count=10).latent_shape == (10,)


@pytest.mark.parametrize(
    "msg_len,tag_len,bits", [(256, 5, 2104), (1, 5, 64), (1, 0, 24)]
)
def test_ciphertext_bit_len(msg_len, tag_len, bits):
    assert ciphertext_bit_len(EmbedParams(0.3, 6, msg_len_bytes=msg_len, tag_len_bytes=tag_len)) == bits


def test_invalid_params_fail_construction():
    with pytest.raises(ValueError):
        EmbedParams(0.3, 0)
    with pytest.raises(ValueError):
        EmbedParams(0.3, 6, latent_count=16, latent_shape=(3, 5))
    with pytest.raises(ValueError):
        EmbedParams(float("nan"), 6)


def test_max_msg_len_fits_expected_capacity():
    # (0.3, 6): mean slots 12520, 3 sd = 163 -> 12357 slots -> 2059 bits -> 257 bytes
    assert max_msg_len(0.3, 6) == 250
    assert max_msg_len(1.5, 16, latent_count=64) == 0


rows = st.builds(
    lambda i, model, prompt, tau, rho, sched, ml, tl, me, s: ParamTableRow(
        i, model, prompt, EmbedParams(tau, rho, sched, ml, tl, me, 4 * s * s)
    ),
    st.integers(0, 10**6),
    st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=12),
    st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=30),
    st.floats(0, 5, allow_nan=False),
    st.integers(1, 64),
    st.sampled_from(list(Scheduler)),
    st.integers(1, 4096),
    st.integers(0, 64),
    st.integers(0, 64),
    st.integers(1, 64),
)


@given(st.lists(rows, min_size=1, max_size=5, unique_by=lambda r: r.row_id))
def test_round_trip(row_list):
    # Leading/trailing whitespace in free-text fields is preserved by csv quoting.
    table = ParamTable(tuple(row_list))
    assert load_table(dump_table(table)) == table
