/** three.js rendering of the loaded clouds with exact point picking. */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import type { CloudPayload } from "./types.js";

export type PickHandler = (cloudId: string, index: number) => void;

export class CloudViewer {
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly controls: OrbitControls;
  private readonly raycaster = new THREE.Raycaster();
  private readonly points = new Map<string, THREE.Points>();

  constructor(private readonly container: HTMLElement, private readonly onPick: PickHandler) {
    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 200);
    this.camera.up.set(0, 0, 1); // z-up world, like the sensor frames
    this.camera.position.set(-3, -4, 3.5);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    container.appendChild(this.renderer.domElement);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(1.5, 2.5, 1.0);

    this.scene.background = new THREE.Color(0xf4f4f8);
    this.scene.add(new THREE.AxesHelper(1.0));
    const grid = new THREE.GridHelper(12, 24, 0xcccccc, 0xe2e2e2);
    grid.rotation.x = Math.PI / 2; // grid on the z=0 floor of a z-up world
    this.scene.add(grid);

    this.renderer.domElement.addEventListener("pointerdown", (e) => this.pick(e));
    window.addEventListener("resize", () => this.resize());
    this.resize();
    this.renderer.setAnimationLoop(() => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    });
  }

  resize(): void {
    const w = this.container.clientWidth || 800;
    const h = this.container.clientHeight || 600;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h);
  }

  setCloud(payload: CloudPayload): void {
    const n = payload.x.length;
    const positions = new Float32Array(n * 3);
    for (let i = 0; i < n; i++) {
      positions[i * 3] = payload.x[i];
      positions[i * 3 + 1] = payload.y[i];
      positions[i * 3 + 2] = payload.z[i];
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute("color", new THREE.BufferAttribute(new Float32Array(n * 3), 3));
    const material = new THREE.PointsMaterial({ size: 0.035, vertexColors: true });
    const object = new THREE.Points(geometry, material);
    object.name = payload.id;
    const existing = this.points.get(payload.id);
    if (existing) this.scene.remove(existing);
    this.points.set(payload.id, object);
    this.scene.add(object);
  }

  setColors(cloudId: string, colors: Float32Array): void {
    const object = this.points.get(cloudId);
    if (!object) return;
    const attr = object.geometry.getAttribute("color") as THREE.BufferAttribute;
    (attr.array as Float32Array).set(colors);
    attr.needsUpdate = true;
  }

  /** Apply (or clear) the 4x4 preview transform of one cloud. */
  setPreviewMatrix(cloudId: string, matrix: number[][] | null): void {
    const object = this.points.get(cloudId);
    if (!object) return;
    if (matrix === null) {
      object.matrixAutoUpdate = true;
      object.position.set(0, 0, 0);
      object.rotation.set(0, 0, 0);
      object.updateMatrix();
      return;
    }
    const m = new THREE.Matrix4();
    // three uses column-major storage; Matrix4.set takes row-major arguments.
    m.set(
      matrix[0][0], matrix[0][1], matrix[0][2], matrix[0][3],
      matrix[1][0], matrix[1][1], matrix[1][2], matrix[1][3],
      matrix[2][0], matrix[2][1], matrix[2][2], matrix[2][3],
      matrix[3][0], matrix[3][1], matrix[3][2], matrix[3][3],
    );
    object.matrixAutoUpdate = false;
    object.matrix.copy(m);
  }

  private pick(event: PointerEvent): void {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    this.raycaster.params.Points = { threshold: 0.03 };
    const hits = this.raycaster.intersectObjects([...this.points.values()], false);
    const hit = hits.find((h) => h.index !== undefined);
    if (hit && hit.index !== undefined) {
      this.onPick(hit.object.name, hit.index);
    }
  }
}
