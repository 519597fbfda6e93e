#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus, KB tables, and frozen eval values.

Everything here is deterministic: rerunning the script reproduces the files
byte for byte. The corpus is built so that states accrete across turns
(diff targets stay much shorter than full-state targets), every edit kind
occurs somewhere (insertions everywhere, one value change arc, one deletion
arc), booking outcomes cover fail and success, and a handful of dialogues
deliberately miss an entity offer or a requested slot so the stored
inform/success values are not a vacuous 100 percent.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from levdst.corpus import Corpus, dump_corpus, load_corpus, save_corpus  # noqa: E402
from levdst.generators import GoldOracle, NoisyOracle  # noqa: E402
from levdst.kb import load_kb  # noqa: E402
from levdst.metrics import (  # noqa: E402
    combined_score,
    corpus_bleu,
    inform_success,
    joint_goal_accuracy,
)
from levdst.pipeline import mean_not_of_targets, run_corpus  # noqa: E402
from levdst.state import PipelineConfig  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

SCHEMA = {
    "domains": ["hotel", "restaurant", "train", "attraction"],
    "slots": {
        "hotel": ["stars", "area", "type", "pricerange", "people", "day", "stay", "name"],
        "restaurant": ["food", "pricerange", "area", "day", "time", "people", "name"],
        "train": ["destination", "departure", "day", "arrive", "leave", "people"],
        "attraction": ["area", "type", "name"],
    },
    "requestables": {
        "hotel": ["phone", "postcode", "address"],
        "restaurant": ["phone", "postcode", "address"],
        "train": ["id", "price", "duration"],
        "attraction": ["phone", "postcode", "address"],
    },
    "booking_slots": {
        "hotel": ["people", "day", "stay"],
        "restaurant": ["people", "day", "time"],
        "train": ["people"],
        "attraction": [],
    },
}

HOTELS = [
    ("gonville hotel", "centre", "3", "hotel", "expensive"),
    ("lensfield hotel", "south", "3", "hotel", "expensive"),
    ("acorn guest house", "north", "4", "guest house", "moderate"),
    ("alpha milton", "north", "3", "guest house", "moderate"),
    ("bridge guest house", "south", "3", "guest house", "moderate"),
    ("cityroomz", "centre", "2", "hotel", "moderate"),
    ("express holiday inn", "east", "2", "hotel", "expensive"),
    ("hamilton lodge", "north", "3", "guest house", "moderate"),
    ("kirkwood house", "north", "4", "guest house", "moderate"),
    ("royal spice hotel", "west", "5", "hotel", "expensive"),
    ("university arms", "centre", "4", "hotel", "expensive"),
    ("cambridge belfry", "west", "4", "hotel", "cheap"),
]

RESTAURANTS = [
    ("curry garden", "indian", "expensive", "centre"),
    ("curry prince", "indian", "moderate", "east"),
    ("bangkok city", "thai", "expensive", "centre"),
    ("sala thong", "thai", "expensive", "west"),
    ("golden wok", "chinese", "moderate", "north"),
    ("charlie chan", "chinese", "cheap", "centre"),
    ("pizza hut city centre", "italian", "cheap", "centre"),
    ("caffe uno", "italian", "expensive", "centre"),
    ("cotto", "british", "moderate", "centre"),
    ("restaurant one seven", "british", "moderate", "centre"),
    ("the oak bistro", "british", "moderate", "centre"),
    ("maharajah tandoori", "indian", "expensive", "west"),
    ("golden house", "chinese", "cheap", "centre"),
    ("rice boat", "indian", "expensive", "west"),
]

ATTRACTIONS = [
    ("broughton house gallery", "centre", "museum"),
    ("byard art", "south", "museum"),
    ("clare college", "west", "college"),
    ("downing college", "centre", "college"),
    ("milton country park", "north", "park"),
    ("wandlebury country park", "south", "park"),
    ("scott polar museum", "centre", "museum"),
    ("queens college", "west", "college"),
]

STATIONS = ["cambridge", "london", "ely", "norwich", "kings lynn"]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]


def build_kb(rng: random.Random) -> dict[str, list[dict[str, str]]]:
    hotels = []
    for i, (name, area, stars, kind, price) in enumerate(HOTELS):
        hotels.append(
            {
                "name": name,
                "area": area,
                "stars": stars,
                "type": kind,
                "pricerange": price,
                "phone": f"01223{100000 + i * 137}",
                "postcode": f"cb{i + 1}{'abcdefghijkl'[i]}z",
                "address": f"{10 + i} {name.split()[0]} road",
            }
        )
    restaurants = []
    for i, (name, food, price, area) in enumerate(RESTAURANTS):
        restaurants.append(
            {
                "name": name,
                "food": food,
                "pricerange": price,
                "area": area,
                "phone": f"01223{302330 + i * 53}",
                "postcode": f"cb{i + 1}{'mnopqrstuvwxyz'[i]}y",
                "address": f"{3 + i} {name.split()[0]} lane",
            }
        )
    trains = []
    seen_routes = set()
    i = 0
    while len(trains) < 20:
        dep, dst = rng.sample(STATIONS, 2)
        day = rng.choice(DAYS)
        hour = rng.randrange(5, 22)
        minute = rng.choice(("00", "15", "30", "45"))
        leave = f"{hour:02d}:{minute}"
        arrive = f"{(hour + 1) % 24:02d}:{minute}"
        key = (dep, dst, day, leave)
        if key in seen_routes:
            continue
        seen_routes.add(key)
        trains.append(
            {
                "id": f"tr{1000 + i * 97}",
                "departure": dep,
                "destination": dst,
                "day": day,
                "leave": leave,
                "arrive": arrive,
                "price": f"{rng.randrange(8, 40)}.{rng.randrange(10, 99)} pounds",
                "duration": f"{rng.randrange(45, 110)} minutes",
            }
        )
        i += 1
    attractions = []
    for i, (name, area, kind) in enumerate(ATTRACTIONS):
        attractions.append(
            {
                "name": name,
                "area": area,
                "type": kind,
                "phone": f"01223{760000 + i * 19}",
                "postcode": f"cb{i + 2}{'qrstuvwx'[i]}a",
                "address": f"{2 + i} {name.split()[0]} street",
            }
        )
    return {
        "hotel": hotels,
        "restaurant": restaurants,
        "train": trains,
        "attraction": attractions,
    }


def _turn(user, response, state, book=None):
    row = {"user": user, "response": response, "state": [list(t) for t in state]}
    if book is not None:
        row["book"] = book
    return row


def hotel_booking(did, hotel, people, day, stay):
    name, area, stars, _, price = hotel
    base = [("hotel", "pricerange", price), ("hotel", "area", area)]
    with_stars = base + [("hotel", "stars", stars)]
    booked = with_stars + [
        ("hotel", "people", people),
        ("hotel", "day", day),
        ("hotel", "stay", stay),
    ]
    turns = [
        _turn(
            f"hello , i need a {price} hotel in the {area} . my booking code is {did} .",
            "there are [value_choice] hotels in the [value_area] . any star preference ?",
            base,
            "none",
        ),
        _turn(
            f"{stars} stars please .",
            "[value_name] is a [value_stars] star place in the [value_area] . shall i book it ?",
            with_stars,
            "none",
        ),
        _turn(
            f"yes , book it for {people} people on {day} for {stay} nights .",
            "booking was successful . reference number is [value_reference] .",
            booked,
            "success",
        ),
        _turn(
            "what is the phone number ?",
            "the phone number is [value_phone] .",
            booked,
            "success",
        ),
        _turn(
            "and the postcode ?",
            "the postcode is [value_postcode] .",
            booked,
            "success",
        ),
        _turn("thank you , goodbye .", "you are welcome . goodbye .", booked, "success"),
    ]
    goal = {
        "constraints": [
            ["hotel", "pricerange", price],
            ["hotel", "area", area],
            ["hotel", "stars", stars],
        ],
        "requestables": {"hotel": ["phone", "postcode"]},
        "booking": ["hotel"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def hotel_by_name(did, hotel, people, day, stay):
    name = hotel[0]
    named = [("hotel", "name", name)]
    booked = named + [
        ("hotel", "people", people),
        ("hotel", "day", day),
        ("hotel", "stay", stay),
    ]
    turns = [
        _turn(
            f"book me a room at {name} . my booking code is {did} .",
            "sure , [value_name] it is . for how many people ?",
            named,
            "none",
        ),
        _turn(
            f"{people} people for {stay} nights from {day} .",
            "booking was successful . reference number is [value_reference] .",
            booked,
            "success",
        ),
        _turn("what is the address ?", "the address is [value_address] .", booked, "success"),
        _turn("perfect , bye .", "goodbye .", booked, "success"),
    ]
    goal = {
        "constraints": [["hotel", "name", name]],
        "requestables": {"hotel": ["address"]},
        "booking": ["hotel"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def restaurant_retry(did, rest, people, day, day2, time):
    name, food, price, area = rest
    base = [("restaurant", "food", food), ("restaurant", "pricerange", price)]
    with_area = base + [("restaurant", "area", area)]
    booked = with_area + [
        ("restaurant", "people", people),
        ("restaurant", "day", day),
        ("restaurant", "time", time),
    ]
    rebooked = [t if t[1] != "day" else ("restaurant", "day", day2) for t in booked]
    turns = [
        _turn(
            f"hello , i want a {food} restaurant that is {price} . my booking code is {did} .",
            "there are [value_choice] such restaurants . any area in mind ?",
            base,
            "none",
        ),
        _turn(
            f"in the {area} please .",
            "how about [value_name] ? it serves [value_food] .",
            with_area,
            "none",
        ),
        _turn(
            f"book a table for {people} people on {day} at {time} .",
            "i am sorry , the booking was unsuccessful . another day perhaps ?",
            booked,
            "fail",
        ),
        _turn(
            f"try {day2} instead .",
            "booking was successful . reference number is [value_reference] .",
            rebooked,
            "success",
        ),
        _turn(
            "what is the phone number ?",
            "the phone number is [value_phone] .",
            rebooked,
            "success",
        ),
        _turn("thanks , goodbye .", "goodbye .", rebooked, "success"),
    ]
    goal = {
        "constraints": [
            ["restaurant", "food", food],
            ["restaurant", "pricerange", price],
            ["restaurant", "area", area],
        ],
        "requestables": {"restaurant": ["phone"]},
        "booking": ["restaurant"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def train_trip(did, train, people):
    dep, dst = train["departure"], train["destination"]
    day, arrive = train["day"], train["arrive"]
    base = [("train", "destination", dst), ("train", "departure", dep)]
    timed = base + [("train", "day", day), ("train", "arrive", arrive)]
    booked = timed + [("train", "people", people)]
    turns = [
        _turn(
            f"hello , i need a train from {dep} to {dst} . my booking code is {did} .",
            "there are [value_choice] trains from [value_departure] to [value_destination] . what day ?",
            base,
            "none",
        ),
        _turn(
            f"{day} , arriving by {arrive} .",
            "[value_id] arrives at [value_arrive] . shall i book tickets ?",
            timed,
            "none",
        ),
        _turn(
            f"yes , for {people} people .",
            "booking was successful . reference number is [value_reference] .",
            booked,
            "success",
        ),
        _turn(
            "how much is the ticket ?",
            "the price is [value_price] per ticket .",
            booked,
            "success",
        ),
        _turn("thank you , goodbye .", "you are welcome . goodbye .", booked, "success"),
    ]
    goal = {
        "constraints": [
            ["train", "destination", dst],
            ["train", "departure", dep],
            ["train", "day", day],
            ["train", "arrive", arrive],
        ],
        "requestables": {"train": ["price"]},
        "booking": ["train"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def hotel_restaurant(did, hotel, rest, people, day, stay):
    hname, harea, hstars, _, hprice = hotel
    rname, rfood, rprice, rarea = rest
    h1 = [("hotel", "pricerange", hprice), ("hotel", "area", harea)]
    h2 = h1 + [("hotel", "stars", hstars)]
    h3 = h2 + [("hotel", "people", people), ("hotel", "day", day), ("hotel", "stay", stay)]
    r1 = h3 + [("restaurant", "food", rfood), ("restaurant", "area", rarea)]
    r2 = r1 + [("restaurant", "pricerange", rprice)]
    turns = [
        _turn(
            f"hello , i need a {hprice} hotel in the {harea} . my booking code is {did} .",
            "there are [value_choice] hotels in the [value_area] . any star preference ?",
            h1,
            "none",
        ),
        _turn(
            f"{hstars} stars please .",
            "[value_name] is a [value_stars] star place . shall i book it ?",
            h2,
            "none",
        ),
        _turn(
            f"yes , book for {people} people on {day} for {stay} nights .",
            "booking was successful . reference number is [value_reference] .",
            h3,
            "success",
        ),
        _turn(
            "what is the hotel phone number ?",
            "the phone number is [value_phone] .",
            h3,
            "success",
        ),
        _turn(
            f"i also need a {rfood} restaurant in the {rarea} .",
            "there are [value_choice] places serving [value_food] there . price range ?",
            r1,
            "success",
        ),
        _turn(
            f"{rprice} please .",
            "how about [value_name] ? it is in the [value_area] .",
            r2,
            "success",
        ),
        _turn(
            "no table needed . what is their address ?",
            "their address is [value_address] . goodbye .",
            r2,
            "success",
        ),
    ]
    goal = {
        "constraints": [
            ["hotel", "pricerange", hprice],
            ["hotel", "area", harea],
            ["hotel", "stars", hstars],
            ["restaurant", "food", rfood],
            ["restaurant", "area", rarea],
            ["restaurant", "pricerange", rprice],
        ],
        "requestables": {"hotel": ["phone"], "restaurant": ["address"]},
        "booking": ["hotel"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def attraction_train(did, attraction, train, people):
    aname, aarea, atype = attraction
    dep, dst = train["departure"], train["destination"]
    day, leave = train["day"], train["leave"]
    a1 = [("attraction", "area", aarea), ("attraction", "type", atype)]
    t1 = a1 + [("train", "destination", dst), ("train", "day", day)]
    t2 = t1 + [("train", "departure", dep), ("train", "leave", leave)]
    t3 = t2 + [("train", "people", people)]
    turns = [
        _turn(
            f"hi , i am looking for a {atype} in the {aarea} . my booking code is {did} .",
            "there are [value_choice] options . how about [value_name] ?",
            a1,
            "none",
        ),
        _turn(
            "sounds good . what is the postcode ?",
            "the postcode is [value_postcode] .",
            a1,
            "none",
        ),
        _turn(
            f"i also need a train to {dst} on {day} .",
            "there are [value_choice] trains to [value_destination] . where from ?",
            t1,
            "none",
        ),
        _turn(
            f"from {dep} , leaving at {leave} .",
            "[value_id] leaves at [value_leave] . want tickets ?",
            t2,
            "none",
        ),
        _turn(
            f"yes , {people} tickets please .",
            "all set . reference number is [value_reference] .",
            t3,
            "success",
        ),
        _turn("great , goodbye .", "goodbye .", t3, "success"),
    ]
    goal = {
        "constraints": [
            ["attraction", "area", aarea],
            ["attraction", "type", atype],
            ["train", "destination", dst],
            ["train", "day", day],
            ["train", "departure", dep],
            ["train", "leave", leave],
        ],
        "requestables": {"attraction": ["postcode"], "train": ["id"]},
        "booking": ["train"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def hotel_change_day(did, hotel, people, day, day2, stay):
    dlg = hotel_booking(did, hotel, people, day, stay)
    booked = dlg["turns"][2]["state"]
    rebooked = [t if t[1] != "day" else ["hotel", "day", day2] for t in booked]
    dlg["turns"][3] = _turn(
        f"actually , change the day to {day2} please .",
        "done . your new reference number is [value_reference] .",
        rebooked,
        "success",
    )
    dlg["turns"][4] = _turn(
        "what is the address ?", "the address is [value_address] .", rebooked, "success"
    )
    dlg["turns"][5] = _turn("thanks , bye .", "goodbye .", rebooked, "success")
    dlg["goal"]["requestables"] = {"hotel": ["address"]}
    return dlg


def hotel_drop_area(did, hotel, start_area, people, day, stay):
    name, area, stars, _, price = hotel
    base = [("hotel", "pricerange", price), ("hotel", "area", start_area)]
    dropped = [("hotel", "pricerange", price)]
    with_stars = dropped + [("hotel", "stars", stars)]
    booked = with_stars + [
        ("hotel", "people", people),
        ("hotel", "day", day),
        ("hotel", "stay", stay),
    ]
    turns = [
        _turn(
            f"i need a {price} hotel in the {start_area} . my booking code is {did} .",
            "there are [value_choice] options . anything else ?",
            base,
            "none",
        ),
        _turn(
            "actually the area does not matter , drop that requirement .",
            "sure , searching all areas now . any star preference ?",
            dropped,
            "none",
        ),
        _turn(
            f"{stars} stars .",
            "[value_name] is a good match . want me to book ?",
            with_stars,
            "none",
        ),
        _turn(
            f"yes , {people} people , {stay} nights from {day} .",
            "booking was successful . reference number is [value_reference] .",
            booked,
            "success",
        ),
        _turn(
            "what is the phone number ?",
            "the phone number is [value_phone] .",
            booked,
            "success",
        ),
        _turn("bye .", "goodbye .", booked, "success"),
    ]
    goal = {
        "constraints": [["hotel", "pricerange", price], ["hotel", "stars", stars]],
        "requestables": {"hotel": ["phone"]},
        "booking": ["hotel"],
    }
    return {"id": did, "goal": goal, "turns": turns}


def inform_miss(did, hotel):
    name, area, stars, _, price = hotel
    base = [("hotel", "pricerange", price), ("hotel", "area", area)]
    with_stars = base + [("hotel", "stars", stars)]
    turns = [
        _turn(
            f"hello , i need a {price} hotel in the {area} . my booking code is {did} .",
            "there are several options .",
            base,
            "none",
        ),
        _turn(f"{stars} stars would be ideal .", "i see . let me look into that .", with_stars, "none"),
        _turn("so which hotel do you suggest ?", "i am not sure yet .", with_stars, "none"),
        _turn("never mind , goodbye .", "sorry about that . goodbye .", with_stars, "none"),
    ]
    goal = {
        "constraints": [
            ["hotel", "pricerange", price],
            ["hotel", "area", area],
            ["hotel", "stars", stars],
        ],
        "requestables": {"hotel": ["phone"]},
        "booking": [],
    }
    return {"id": did, "goal": goal, "turns": turns}


def success_miss(did, hotel, people, day, stay):
    dlg = hotel_booking(did, hotel, people, day, stay)
    booked = dlg["turns"][3]["state"]
    dlg["turns"][3] = _turn(
        "what is the phone number ?",
        "i do not have that information right now .",
        booked,
        "success",
    )
    dlg["turns"][4] = _turn(
        "no postcode either ?", "afraid not , sorry .", booked, "success"
    )
    dlg["goal"]["requestables"] = {"hotel": ["phone"]}
    return dlg


def build_dialogues(kb, rng):
    hotels = HOTELS
    rests = RESTAURANTS
    trains = kb["train"]
    attractions = ATTRACTIONS
    dialogues = []
    n = 0

    def next_id():
        nonlocal n
        n += 1
        return f"fx{n:03d}"

    for i in range(6):
        dialogues.append(
            hotel_booking(
                next_id(), hotels[i], str(rng.randrange(1, 9)), rng.choice(DAYS), str(rng.randrange(1, 6))
            )
        )
    for i in range(3):
        dialogues.append(
            restaurant_retry(
                next_id(),
                rests[i],
                str(rng.randrange(1, 9)),
                DAYS[i],
                DAYS[i + 3],
                f"{rng.randrange(11, 21)}:{rng.choice(('00', '15', '30', '45'))}",
            )
        )
    for i in range(3):
        dialogues.append(train_trip(next_id(), trains[i], str(rng.randrange(1, 9))))
    for i in range(3):
        rest = next(r for r in rests if r[3] == hotels[i + 6][1])
        dialogues.append(
            hotel_restaurant(
                next_id(),
                hotels[i + 6],
                rest,
                str(rng.randrange(1, 9)),
                rng.choice(DAYS),
                str(rng.randrange(1, 6)),
            )
        )
    for i in range(2):
        dialogues.append(
            attraction_train(next_id(), attractions[i], trains[i + 3], str(rng.randrange(1, 9)))
        )
    for i in range(2):
        dialogues.append(
            hotel_change_day(
                next_id(),
                hotels[i + 9],
                str(rng.randrange(1, 9)),
                DAYS[i],
                DAYS[i + 2],
                str(rng.randrange(1, 6)),
            )
        )
    hotel = hotels[11]
    other_area = next(a for a in ("centre", "north", "south") if a != hotel[1])
    dialogues.append(
        hotel_drop_area(
            next_id(), hotel, other_area, str(rng.randrange(1, 9)), rng.choice(DAYS), str(rng.randrange(1, 6))
        )
    )
    dialogues.append(hotel_by_name(next_id(), hotels[0], str(rng.randrange(1, 9)), rng.choice(DAYS), str(rng.randrange(1, 6))))
    for i in range(2):
        dialogues.append(inform_miss(next_id(), hotels[i + 3]))
    for i in range(2):
        dialogues.append(
            success_miss(
                next_id(), hotels[i + 5], str(rng.randrange(1, 9)), rng.choice(DAYS), str(rng.randrange(1, 6))
            )
        )
    return dialogues


MUL0113 = {
    "id": "MUL0113",
    "goal": {
        "constraints": [
            ["hotel", "stars", "3"],
            ["hotel", "type", "hotel"],
            ["restaurant", "food", "indian"],
            ["restaurant", "pricerange", "expensive"],
        ],
        "requestables": {"restaurant": ["phone"]},
        "booking": ["hotel"],
    },
    "turns": [
        {
            "user": "i am looking for an expensive indian restaurant .",
            "response": "there are [value_choice] expensive indian restaurants . what area would you like ?",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
            ],
            "book": "none",
        },
        {
            "user": "any area is fine , just pick a good one .",
            "response": "how about [value_name] ? their phone number is [value_phone] .",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
            ],
            "book": "none",
        },
        {
            "user": "sounds good . i also need a 3 star hotel , a proper hotel not a guest house .",
            "response": "i have [value_choice] hotels with [value_stars] stars . any other requirements ?",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
                ["hotel", "stars", "3"],
                ["hotel", "type", "hotel"],
            ],
            "book": "none",
        },
        {
            "user": "which one do you recommend ?",
            "response": "[value_name] is popular . shall i book a room ?",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
                ["hotel", "stars", "3"],
                ["hotel", "type", "hotel"],
            ],
            "book": "none",
        },
        {
            "user": "yes , book it for 2 people for 2 nights starting sunday .",
            "response": "i am sorry , the booking was unsuccessful . want to try a shorter stay ?",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
                ["hotel", "stars", "3"],
                ["hotel", "type", "hotel"],
                ["hotel", "people", "2"],
                ["hotel", "day", "sunday"],
                ["hotel", "stay", "2"],
            ],
            "book": "fail",
        },
        {
            "user": "okay , try just 1 night instead .",
            "response": "booking was successful . reference number is [value_reference] .",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
                ["hotel", "stars", "3"],
                ["hotel", "type", "hotel"],
                ["hotel", "people", "2"],
                ["hotel", "day", "sunday"],
                ["hotel", "stay", "1"],
            ],
            "book": "success",
        },
        {
            "user": "great , that is all . thank you !",
            "response": "you are welcome . goodbye .",
            "state": [
                ["restaurant", "food", "indian"],
                ["restaurant", "pricerange", "expensive"],
                ["hotel", "stars", "3"],
                ["hotel", "type", "hotel"],
                ["hotel", "people", "2"],
                ["hotel", "day", "sunday"],
                ["hotel", "stay", "1"],
            ],
            "book": "success",
        },
    ],
}


def main() -> None:
    rng = random.Random(20250719)
    FIXTURES.mkdir(parents=True, exist_ok=True)
    kb_dir = FIXTURES / "kb"
    kb_dir.mkdir(exist_ok=True)

    kb_tables = build_kb(rng)
    for domain, records in kb_tables.items():
        (kb_dir / f"{domain}.json").write_text(
            json.dumps(records, indent=2) + "\n", encoding="utf-8"
        )

    dialogues = build_dialogues(kb_tables, rng)
    corpus_doc = {"schema": SCHEMA, "dialogues": dialogues}
    (FIXTURES / "corpus.json").write_text(
        json.dumps(corpus_doc, indent=2) + "\n", encoding="utf-8"
    )
    # Rewrite in the canonical save_corpus form so the stored file is
    # byte-identical to what dump would produce from it.
    save_corpus(load_corpus(FIXTURES / "corpus.json"), FIXTURES / "corpus.json")
    (FIXTURES / "mul0113.json").write_text(
        json.dumps({"schema": SCHEMA, "dialogues": [MUL0113]}, indent=2) + "\n",
        encoding="utf-8",
    )
    save_corpus(load_corpus(FIXTURES / "mul0113.json"), FIXTURES / "mul0113.json")

    corpus = load_corpus(FIXTURES / "corpus.json")
    kb = load_kb(kb_dir, corpus.schema)
    cfg = PipelineConfig(context_window=2, rng_seed=0)

    runs = run_corpus(corpus, lambda: GoldOracle(corpus), kb, cfg)
    predicted = [s for r in runs for s in r.states]
    gold = [t.gold_state for d in corpus.dialogues for t in d.turns]
    joint = joint_goal_accuracy(predicted, gold).joint_accuracy
    inform, success = inform_success(
        corpus.dialogues, [r.responses for r in runs], [r.states for r in runs], kb
    )
    candidates = [resp for r in runs for resp in r.responses]
    references = [t.gold_delex_response for d in corpus.dialogues for t in d.turns]
    bleu = corpus_bleu(candidates, references)

    seen: dict[tuple[str, str], str] = {}
    for run in runs:
        for trace in run.traces:
            for kind, output in (("lev", trace.raw_lev), ("response", trace.raw_response)):
                key = (kind, trace.encoded_input)
                assert seen.get(key, output) == output, f"replay key collision at {key}"
                seen[key] = output

    noisy_runs = run_corpus(corpus, lambda: NoisyOracle(corpus, p=0.5, seed=7), kb, cfg)
    noisy_joint = joint_goal_accuracy(
        [s for r in noisy_runs for s in r.states], gold
    ).joint_accuracy

    not_lev = mean_not_of_targets(corpus, "lev")
    not_full = mean_not_of_targets(corpus, "full_span")

    frozen = {
        "gold": {
            "joint_acc": joint,
            "inform": inform,
            "success": success,
            "bleu": bleu,
            "combined": combined_score(inform, success, bleu),
        },
        "noisy_p50_seed7_joint_acc": noisy_joint,
        "not_lev": not_lev,
        "not_full_span": not_full,
    }
    (FIXTURES / "frozen_eval.json").write_text(
        json.dumps(frozen, indent=2) + "\n", encoding="utf-8"
    )

    print(f"dialogues: {len(dialogues)}  turns: {corpus.turn_count()}")
    print(f"gold joint_acc: {joint}")
    print(f"gold inform/success/bleu: {inform} / {success} / {bleu}")
    print(f"noisy(p=0.5, seed=7) joint_acc: {noisy_joint}")
    print(f"NoT lev vs full_span: {not_lev:.3f} vs {not_full:.3f} (ratio {not_lev / not_full:.3f})")
    assert joint == 1.0, "gold replay must track perfectly"
    assert not_lev < 0.5 * not_full, "diff targets must stay under half the full targets"


if __name__ == "__main__":
    main()
