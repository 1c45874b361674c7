import { ApiClient } from "./api";
import { App } from "./app";

declare global {
  interface Window {
    IRAG_SERVICE_URL?: string;
  }
}

const baseUrl = window.IRAG_SERVICE_URL ?? "";
const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const app = new App(root, new ApiClient(baseUrl));
void app.refreshHealth();
