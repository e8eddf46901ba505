// Contract tests against the real backend: the client-side view models
// must agree with the server on every shared rule.

import assert from "node:assert/strict";
import {after, before, test} from "node:test";

import {Api} from "../src/api.js";
import {addInstance, defaultExpansion, newCardViewState,
        renderCardTree, CardNode} from "../src/cardTree.js";
import {buildMapModel} from "../src/mapView.js";
import {Selection, buildQuery} from "../src/queryBuilder.js";
import {filterRows} from "../src/tableFilter.js";
import {validateTimeExpression} from "../src/timeField.js";
import type {EditJson, PredicateJson} from "../src/types.js";
import {Server, startServer} from "./server.js";

let server: Server;
let api: Api;

before(async () => {
  server = await startServer();
  api = new Api(server.baseUrl);
  await api.login("maria", "pw");
}, {timeout: 60000});

after(() => server.stop());

async function create(typeName: string, edits: EditJson[]): Promise<string> {
  const doc = await api.createEntity(typeName);
  if (edits.length) await api.edit(doc.id, 0, edits);
  return doc.id;
}

const text = (path: string, value: string): EditJson =>
  ({path, value: {kind: "text", text: value}});
const term = (path: string, vocab: string, id: string): EditJson =>
  ({path, value: {kind: "term", vocab, id, label: id}});
const link = (path: string, type: string, id: string): EditJson =>
  ({path, value: {kind: "link", type, id, label: id}});
const time = (path: string, expr: string): EditJson =>
  ({path, value: {kind: "time", expr}});
const geo = (path: string, lat: number, lon: number): EditJson =>
  ({path, value: {kind: "geo", geometry: "point", points: [[lat, lon]]}});

function expandedGroups(nodes: CardNode[]): string[] {
  const out: string[] = [];
  const walk = (list: CardNode[]) => {
    for (const node of list) {
      if (node.kind === "group") {
        if (node.expanded) out.push(node.path);
        walk(node.children);
      }
    }
  };
  walk(nodes);
  return out.sort();
}

test("card expansion equals the filled-group set on three live cards", async () => {
  const cards = [
    await create("Object", [text("ObjectIdentity/ObjectCode", "RC-1"),
                            text("ObjectIdentity/ObjectName", "Icon")]),
    await create("Object", [
      text("ObjectIdentity/ObjectCode", "RC-2"),
      text("ObjectIdentity/ObjectName", "Measured"),
      {path: "DetailedObjectDescription/Measurement[1]/Dimension[1]/DimensionValue",
       value: {kind: "number", value: "15"}},
    ]),
    await create("Object", [
      text("ObjectIdentity/ObjectCode", "RC-3"),
      text("ObjectIdentity/ObjectName", "Used"),
      text("ObjectHistory/Use[1]/UseName", "procession"),
    ]),
  ];
  const expected = [
    ["ObjectIdentity"],
    ["DetailedObjectDescription", "DetailedObjectDescription/Measurement[1]",
     "DetailedObjectDescription/Measurement[1]/Dimension[1]", "ObjectIdentity"],
    ["ObjectHistory", "ObjectHistory/Use[1]", "ObjectIdentity"],
  ];
  for (let i = 0; i < cards.length; i++) {
    const doc = await api.entity(cards[i]!);
    const schema = await api.schema("Object");
    const state = newCardViewState(doc, "view");
    const tree = renderCardTree(doc, schema, state);
    assert.deepEqual(expandedGroups(tree.nodes), expected[i],
                     `card ${i + 1}`);
    assert.deepEqual([...defaultExpansion(doc)].sort(), expected[i]);
  }
});

test("adding an instance duplicates the subtree and the server accepts the new paths", async () => {
  const id = await create("Object", [
    text("ObjectIdentity/ObjectCode", "RC-4"),
    text("ObjectIdentity/ObjectName", "Growing"),
    {path: "DetailedObjectDescription/Measurement[1]/Dimension[1]/DimensionValue",
     value: {kind: "number", value: "15"}},
  ]);
  const doc = await api.entity(id);
  const schema = await api.schema("Object");
  const state = newCardViewState(doc, "edit");
  const fresh = addInstance(doc, schema, state,
                            "DetailedObjectDescription/Measurement[1]");
  assert.equal(fresh.path, "DetailedObjectDescription/Measurement[2]");
  const saved = await api.edit(id, doc.revision, [
    {path: `${fresh.path}/Dimension[1]/DimensionValue`,
     value: {kind: "number", value: "20"}},
  ]);
  assert.equal(saved.revision, doc.revision + 1);
});

test("time-field live validation shows the server's spans", async () => {
  const good = await validateTimeExpression(api, "1st half 4th century");
  assert.deepEqual(good, {ok: true, expr: "1st half 4th century",
                          earliest: 301, latest: 350, display: "[301, 350]"});
  const circa = await validateTimeExpression(api, "ca. 1920");
  assert.ok(circa.ok && circa.display === "[1910, 1930]");
  const bad = await validateTimeExpression(api, "springtime");
  assert.ok(!bad.ok && bad.message.includes("accepted forms"));
});

test("query builder output is accepted unchanged across ten scenarios", async () => {
  const athos = await create("Location", [
    text("Name", "Mount Athos"),
    term("LocationType", "location-type", "monastery"),
    term("GeopoliticalHierarchy/Country", "country", "greece"),
  ]);
  const moscow = await create("Location", [
    text("Name", "Moscow"),
    term("GeopoliticalHierarchy/Country", "country", "russia"),
  ]);
  await create("ObjectTransfer", [
    text("TransferCore/TransferName", "donated icon"),
    term("TransferCore/TransferPurpose", "transfer-purpose", "donation"),
    time("TransferCore/TransferDate", "ca. 1750"),
    link("TransferCore/FromLocation", "Location", moscow),
    link("TransferCore/ToLocation", "Location", athos),
  ]);
  const transferDate = {path: "TransferCore/TransferDate",
                        label: "Transfer date", kind: "time-expression"};
  const purpose = {path: "TransferCore/TransferPurpose", label: "Purpose",
                   kind: "vocab-term"};
  const transferName = {path: "TransferCore/TransferName", label: "Name",
                        kind: "text-plain"};
  const country = {path: "GeopoliticalHierarchy/Country", label: "Country",
                   kind: "vocab-term"};
  const locationName = {path: "Name", label: "Name", kind: "text-plain"};
  const toLocation = {path: "TransferCore/ToLocation", label: "To",
                      kind: "entity-link"};
  const scenarios: {type: string; selections: Selection[]}[] = [
    {type: "ObjectTransfer", selections: [
      {op: "term_is", field: purpose, termId: "donation"},
      {op: "date_within", field: transferDate, expr: "18th century"}]},
    {type: "ObjectTransfer", selections: [
      {op: "contains", field: transferName, text: "icon"}]},
    {type: "ObjectTransfer", selections: [
      {op: "equals", field: transferName, text: "donated icon"}]},
    {type: "ObjectTransfer", selections: [
      {op: "date_overlaps", field: transferDate, expr: "decade of 1740"}]},
    {type: "ObjectTransfer", selections: [
      {op: "links_to", field: toLocation, entityId: athos}]},
    {type: "ObjectTransfer", selections: [
      {op: "links_to", field: null, entityId: moscow}]},
    {type: "ObjectTransfer", selections: [{op: "status_is",
                                           status: "unpublished"}]},
    {type: "Location", selections: [
      {op: "term_is", field: country, termId: "greece"},
      {op: "contains", field: locationName, text: "athos"}]},
    {type: "Location", selections: [
      {op: "term_is", field: country, termId: "russia"}]},
    {type: "Location", selections: [
      {op: "contains", field: locationName, text: "MOSC"},
      {op: "status_is", status: "unpublished"}]},
  ];
  for (const scenario of scenarios) {
    const predicates: PredicateJson[] = buildQuery(scenario.selections);
    const out = await api.advancedSearch(scenario.type, predicates);
    assert.ok(Array.isArray(out.ids),
              `server rejected ${JSON.stringify(predicates)}`);
    assert.ok(out.ids.length >= 1,
              `expected hits for ${JSON.stringify(predicates)}`);
  }
});

test("client table filter matches the server row filter", async () => {
  await create("Book", [text("Title", "Chronicle of the monastery")]);
  await create("Book", [text("Title", "Travels in the Balkans")]);
  const allRows = await api.rows("Book");
  for (const filter of ["chron", "BALKANS", "bok-", "zzz", ""]) {
    const clientSide = filterRows(allRows, filter).map(r => r.id).sort();
    const serverSide = (await api.rows("Book", filter)).map(r => r.id).sort();
    assert.deepEqual(clientSide, serverSide, `filter ${JSON.stringify(filter)}`);
  }
});

test("map view renders the fixture selection", async () => {
  const here = await create("Location", [text("Name", "Here"),
                                         geo("Coordinates", 40.0, 24.0)]);
  const there = await create("Location", [text("Name", "There"),
                                          geo("Coordinates", 50.0, 30.0)]);
  const bare = await create("Location", [text("Name", "Nowhere")]);
  const transfer = await create("ObjectTransfer", [
    text("TransferCore/TransferName", "leg one"),
    link("TransferCore/FromLocation", "Location", here),
    link("TransferCore/ToLocation", "Location", there),
  ]);
  const back = await create("ObjectTransfer", [
    text("TransferCore/TransferName", "leg two"),
    link("TransferCore/FromLocation", "Location", there),
    link("TransferCore/ToLocation", "Location", here),
  ]);
  const route = await create("Route", [
    text("RouteName", "round trip"),
    link("ObjectTransfers[1]", "ObjectTransfer", transfer),
    link("ObjectTransfers[2]", "ObjectTransfer", back),
  ]);
  const collection = await api.mapFeatures([here, there, transfer, route, bare]);
  const model = buildMapModel(collection);
  assert.equal(model.markers.length, 2);
  assert.equal(model.polylines.filter(l => l.group === null).length, 1);
  assert.equal(model.polylines.filter(l => l.group === route).length, 2);
  assert.deepEqual(model.unresolved,
                   [{entity: bare, reason: "no coordinates"}]);
});

test("revision conflicts surface instead of silently losing edits", async () => {
  const id = await create("Object", [text("ObjectIdentity/ObjectCode", "RC-9"),
                                     text("ObjectIdentity/ObjectName", "Racy")]);
  await api.edit(id, 1, [text("ObjectIdentity/ObjectName", "moved on")]);
  await assert.rejects(
    api.edit(id, 1, [text("ObjectIdentity/ObjectName", "stale write")]),
    (error: any) => error.status === 409 && error.code === "revision-conflict");
});

test("vocabulary admin screens are rights-gated", async () => {
  // the editor may not see duplicate-candidate curation
  await assert.rejects(api.duplicateCandidates("location-type"),
                       (error: any) => error.status === 403);
  const admin = new Api(server.baseUrl);
  await admin.login("oa", "pw");
  const out = await admin.duplicateCandidates("location-type");
  assert.ok(Array.isArray(out.clusters));
});
