"""Writes door_unlock_0x01.log: a parked-vehicle capture in which the driver
unlocks the doors shortly before switching the ignition on.

Message 0x001 carries the lock state in its second byte (0x10 locked,
0x30 unlocked) and a rolling checksum in its last two bytes, which alternate
between AB CD and 54 32 (BC EF and 43 10 while unlocked).
"""

from pathlib import Path

IGNITION_US = 40_000_000
END_US = 45_000_000
UNLOCK_US = (32_000_000, 35_000_000)

OFF_IDS = {  # id -> (period us, payload)
    0x001: (100_000, None),
    0x0A2: (200_000, "0000000000000000"),
    0x0C8: (500_000, "0000000000000000"),
    0x0F0: (500_000, "0000000000000000"),
    0x1F3: (250_000, "0001000000000000"),
    0x3B3: (200_000, "0000000000000000"),
}
ON_IDS = [0x201, 0x202, 0x211, 0x212, 0x221, 0x222, 0x331, 0x332, 0x341, 0x342, 0x351, 0x352]


def door_payload(t_us, emission):
    unlocked = UNLOCK_US[0] <= t_us < UNLOCK_US[1]
    tail = ("BCEF", "4310") if unlocked else ("ABCD", "5432")
    return ("0030" if unlocked else "0010") + "0000FF00" + tail[emission % 2]


def records():
    out = []
    for ident, (period, payload) in OFF_IDS.items():
        for k, t in enumerate(range(0, END_US, period)):
            out.append((t, ident, door_payload(t, k) if payload is None else payload))
    for ident in ON_IDS:
        for t in range(IGNITION_US, END_US, 100_000):
            out.append((t, ident, "0000000000000000"))
    out.sort(key=lambda r: r[0])  # stable: ties keep insertion order
    return out


def main():
    lines = [f"({t // 1_000_000}.{t % 1_000_000:06d}) vcan0 {i:03X}#{d}" for t, i, d in records()]
    Path(__file__).with_name("door_unlock_0x01.log").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
