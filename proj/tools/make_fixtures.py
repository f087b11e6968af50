#!/usr/bin/env python3
"""Regenerates data/fixtures/ (deterministic). The committed files are what the tests use."""
import csv
import datetime as dt
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixtures"
rng = random.Random(20190301)

FIRST = ["Omar", "Layla", "Yusuf", "Sara", "Hamza", "Noura", "Khalid", "Mona", "Faisal", "Reem",
         "Tariq", "Huda", "Adel", "Dana", "Majid", "Lina", "Samir", "Rana", "Nabil", "Aisha"]
LAST = ["Alharbi", "Qahtani", "Otaibi", "Ghamdi", "Zahrani", "Shehri", "Dosari", "Mutairi", "Harbi", "Anazi"]
CITIES = ["Riyadh", "Jeddah", "Dammam", "Abha", "Taif"]
UNIS = ["King Saud University", "Umm Al-Qura University", "Taibah University", "Qassim University"]

N_USERS = 40
users = []
used = set()
for uid in range(1, N_USERS + 1):
    while True:
        first, last = rng.choice(FIRST), rng.choice(LAST)
        if (first, last) not in used:
            used.add((first, last))
            break
    users.append(dict(user_id=uid, username=f"{first.lower()}{last.lower()[:4]}{uid:02d}", name=f"{first} {last}",
                      gender=rng.choice(["male", "female"]), city=rng.choice(CITIES), university=rng.choice(UNIS),
                      age=rng.randint(21, 45)))

# Questionnaire: each user has a latent level per trait; responses jitter around it.
TRAIT_OF_ITEM = []
REVERSED = []
for line in (OUT.parent / "questionnaire" / "bfi44.txt").read_text().splitlines():
    if not line or line.startswith("#"):
        continue
    _, trait, flag = line.split("|")
    TRAIT_OF_ITEM.append(trait)
    REVERSED.append(flag == "R")
latent = {u["user_id"]: {t: rng.uniform(1.5, 4.5) for t in sorted(set(TRAIT_OF_ITEM))} for u in users}
questionnaire = []
for u in users:
    row = [u["user_id"]]
    for trait, rev in zip(TRAIT_OF_ITEM, REVERSED):
        v = latent[u["user_id"]][trait] + rng.uniform(-1, 1)
        if rev:
            v = 6 - v
        row.append(min(5, max(1, round(v))))
    questionnaire.append(row)

# Social profiles: 12 reveal their username in a post, 10 are resolvable from basic info only, 3 are strangers.
profiles = []
social_posts = []
links = {}
picked = rng.sample(users, 22)
for i, u in enumerate(picked):
    sid = f"tw{1000 + i}"
    links[sid] = u["user_id"]
    if i < 12:
        profiles.append(dict(social_id=sid, display_name=u["name"], gender="", city="", university=""))
        social_posts.append((sid, f"hi, my username is {u['username']} and I still have a problem"))
    else:
        profiles.append(dict(social_id=sid, display_name=u["name"], gender=u["gender"], city=u["city"],
                             university=u["university"]))
for j in range(3):
    profiles.append(dict(social_id=f"tw{2000 + j}", display_name=f"Guest {j}", gender="", city="", university=""))

EMOTION_WORDS = {
    "idle": ["thanks", "great", "happy", "perfect", "smooth", "nice", "glad"],
    "slow": ["frustrated", "tired", "disappointed", "annoying", "sad", "upset"],
    "down": ["worried", "panic", "afraid", "deadline", "nervous", "scared"],
    "error": ["disgusting", "awful", "useless", "terrible", "rubbish", "angry"],
}
NEUTRAL = ["the", "portal", "page", "my", "application", "today", "is", "again", "please", "help", "file"]
KEYWORD = {
    "idle": ["working fine", "thanks"],
    "slow": ["upload", "so slow", "cannot upload"],
    "down": ["site is down", "not working", "cannot access"],
    "error": ["error", "sql error", "error code"],
}
MEDIAN = {"idle": (0.02, 0.09), "slow": (11.0, 18.0), "down": (0.5, 3.0), "error": (0.4, 6.0)}

start = dt.datetime(2019, 1, 6, 8, 0, 0)
posts = []
responses = []
statuses = ["idle", "slow", "down", "error"]
for w in range(64):
    status = statuses[w % 4] if w < 8 else rng.choice(statuses)
    wstart = start + dt.timedelta(minutes=15 * (3 * w))  # windows spaced apart
    lo, hi = MEDIAN[status]
    for k in range(5):
        t = wstart + dt.timedelta(minutes=3 * k, seconds=rng.randint(0, 59))
        value = round(rng.uniform(lo, hi), 2)
        if status == "down" and k == 2:
            value = 0
        responses.append((t, value))
    authors = rng.sample(users, rng.randint(3, 6))
    for a in authors:
        sid = next((s for s, uid in links.items() if uid == a["user_id"]), None)
        platform, ref = ("twitter", sid) if sid and rng.random() < 0.5 else ("helpdesk", str(a["user_id"]))
        # mostly status-consistent emotion, sometimes noise
        mood = status if rng.random() < 0.8 else rng.choice(statuses)
        words = rng.sample(EMOTION_WORDS[mood], 2) + rng.sample(NEUTRAL, 4)
        rng.shuffle(words)
        text = " ".join(words)
        if rng.random() < 0.7 or status == "error":
            text = rng.choice(KEYWORD[status]) + ", " + text
        t = wstart + dt.timedelta(minutes=rng.randint(0, 14), seconds=rng.randint(0, 59))
        posts.append((t, ref, platform, text.capitalize() + "."))

for sid, text in social_posts:
    posts.append((start - dt.timedelta(days=1, minutes=len(posts)), sid, "twitter", text))
posts.sort(key=lambda p: (p[0], p[1]))

fmt = lambda t: t.strftime("%Y-%m-%d %H:%M:%S")
OUT.mkdir(parents=True, exist_ok=True)
with open(OUT / "posts.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["timestamp", "user_ref", "platform", "text"])
    for i, (t, ref, plat, text) in enumerate(posts):
        w.writerow([fmt(t), ref, plat, text])
        if i == 10:
            w.writerow(["not-a-timestamp", "1", "helpdesk", "this row is malformed"])
with open(OUT / "responses.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["timestamp", "avg_response_s"])
    for t, v in sorted(responses):
        w.writerow([fmt(t), v])
with open(OUT / "users.csv", "w", newline="") as f:
    w = csv.DictWriter(f, fieldnames=list(users[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(users)
with open(OUT / "profiles.csv", "w", newline="") as f:
    w = csv.DictWriter(f, fieldnames=list(profiles[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(profiles)
with open(OUT / "questionnaire.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["user_id"] + [f"item_{i + 1}" for i in range(len(TRAIT_OF_ITEM))])
    w.writerows(questionnaire)

call_open, call_close, ext_close = dt.datetime(2019, 1, 1), dt.datetime(2019, 2, 1), dt.datetime(2019, 2, 10)
with open(OUT / "call_window.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["call_open", "call_close", "extension_close"])
    w.writerow([fmt(call_open), fmt(call_close), fmt(ext_close)])
span = (ext_close - call_open).total_seconds()
SEGMENTS = [(0, 20), (20, 40), (40, 60), (60, 90), (90, 100)]
CLASS_TUPLES = [(1, 3, 3, 3), (2, 2, 2, 2), (2, 3, 3, 3), (2, 3, 4, 4), (3, 3, 3, 3), (3, 3, 4, 4), (3, 4, 4, 4),
                (4, 4, 4, 4)]
with open(OUT / "timelines.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["user_id", "t0", "t1", "t2", "t3"])
    for u in users:
        if rng.random() < 0.85:
            segs = rng.choice(CLASS_TUPLES)
        else:
            segs = tuple(sorted(rng.randrange(5) for _ in range(4)))
        pts = sorted(rng.uniform(SEGMENTS[s][0], SEGMENTS[s][1] - 0.01) / 100 for s in segs)
        row = [u["user_id"]] + [fmt(call_open + dt.timedelta(seconds=int(p * span))) for p in pts]
        if u["user_id"] % 13 == 0:
            row[4] = ""  # never submitted
        w.writerow(row)
print(len(posts), "posts,", len(responses), "samples,", len(profiles), "profiles")
