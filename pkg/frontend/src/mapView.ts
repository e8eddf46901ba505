// Map rendering model: projects the server's feature collection into SVG
// coordinates. Points for locations and objects, polylines for transfer
// lines, grouped polylines for routes; unresolved entities are listed
// beside the map, never dropped.

import type {FeatureCollectionJson, MapFeatureJson} from "./types.js";

export type Marker = {x: number; y: number; entity: string;
                      popup: {[path: string]: string}};
export type Polyline = {points: {x: number; y: number}[]; entity: string;
                        group: string | null; degenerate: boolean};

export type MapRenderModel = {
  width: number;
  height: number;
  markers: Marker[];
  polylines: Polyline[];
  unresolved: {entity: string; reason: string}[];
};

type LatLon = [number, number];

function collectCoordinates(feature: MapFeatureJson): LatLon[] {
  if (feature.kind === "point") {
    return [feature.geometry as LatLon];
  }
  if (feature.kind === "line") {
    return feature.geometry as LatLon[];
  }
  return (feature.geometry as LatLon[][]).flat();
}

/** Equirectangular projection fitted to the features' bounding box. */
export function buildMapModel(collection: FeatureCollectionJson,
                              width = 800, height = 500,
                              padding = 24): MapRenderModel {
  const all: LatLon[] = collection.features.flatMap(collectCoordinates);
  let minLat = Math.min(...all.map(c => c[0]), 90);
  let maxLat = Math.max(...all.map(c => c[0]), -90);
  let minLon = Math.min(...all.map(c => c[1]), 180);
  let maxLon = Math.max(...all.map(c => c[1]), -180);
  if (all.length === 0) {
    minLat = -60; maxLat = 70; minLon = -30; maxLon = 60;
  }
  if (minLat === maxLat) { minLat -= 1; maxLat += 1; }
  if (minLon === maxLon) { minLon -= 1; maxLon += 1; }
  const innerW = width - 2 * padding;
  const innerH = height - 2 * padding;
  const project = ([lat, lon]: LatLon) => ({
    x: padding + ((lon - minLon) / (maxLon - minLon)) * innerW,
    y: padding + ((maxLat - lat) / (maxLat - minLat)) * innerH,
  });

  const model: MapRenderModel = {
    width, height, markers: [], polylines: [],
    unresolved: [...collection.unresolved],
  };
  for (const feature of collection.features) {
    if (feature.kind === "point") {
      const {x, y} = project(feature.geometry as LatLon);
      model.markers.push({x, y, entity: feature.entity, popup: feature.popup});
    } else if (feature.kind === "line") {
      const line = feature.geometry as LatLon[];
      model.polylines.push({
        points: line.map(project),
        entity: feature.entity,
        group: null,
        degenerate: feature.degenerate,
      });
    } else {
      for (const line of feature.geometry as LatLon[][]) {
        model.polylines.push({
          points: line.map(project),
          entity: feature.entity,
          group: feature.entity,
          degenerate: false,
        });
      }
    }
  }
  return model;
}

export function renderMapSvg(model: MapRenderModel): string {
  const parts = [
    `<svg viewBox="0 0 ${model.width} ${model.height}" ` +
    `xmlns="http://www.w3.org/2000/svg" class="map-canvas">`,
  ];
  for (const line of model.polylines) {
    const points = line.points.map(p => `${p.x.toFixed(1)},${p.y.toFixed(1)}`)
      .join(" ");
    const cls = line.group ? "route-line" : "transfer-line";
    parts.push(`<polyline points="${points}" class="${cls}" ` +
               `data-entity="${line.entity}" fill="none"/>`);
    for (const p of [line.points[0], line.points[line.points.length - 1]]) {
      if (p) {
        parts.push(`<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" ` +
                   `r="3" class="endpoint"/>`);
      }
    }
  }
  for (const marker of model.markers) {
    const title = Object.values(marker.popup).join(" — ");
    parts.push(`<circle cx="${marker.x.toFixed(1)}" cy="${marker.y.toFixed(1)}" ` +
               `r="5" class="marker" data-entity="${marker.entity}">` +
               `<title>${escapeXml(title)}</title></circle>`);
  }
  parts.push("</svg>");
  return parts.join("\n");
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
